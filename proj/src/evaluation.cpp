#include "mrsi/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

namespace mrsi {
namespace {

Eigen::MatrixXd substance_block(const SubstanceDistribution& x, std::size_t j) {
  // voxels x frames
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.voxels), static_cast<Eigen::Index>(x.frames()));
  for (std::size_t m = 0; m < x.frames(); ++m) {
    for (std::size_t r = 0; r < x.voxels; ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = x.at(m, r, j);
    }
  }
  return out;
}

void max_normalize(Eigen::MatrixXd& a) {
  const double peak = a.cwiseAbs().maxCoeff();
  if (peak > 0.0) a /= peak;
}

}  // namespace

double normalized_rmse(const SubstanceDistribution& recon, const SubstanceDistribution& truth,
                       std::size_t substance) {
  if (recon.values.rows() != truth.values.rows() || recon.values.cols() != truth.values.cols() ||
      recon.substances != truth.substances) {
    throw ShapeError("reconstruction and truth have different shapes");
  }
  if (substance >= truth.substances) throw ShapeError("substance index out of range");
  Eigen::MatrixXd r = substance_block(recon, substance);
  Eigen::MatrixXd t = substance_block(truth, substance);
  max_normalize(r);
  max_normalize(t);
  const double denom = t.norm();
  if (denom == 0.0) return r.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (r - t).norm() / denom;
}

std::size_t hottest_voxel(const SubstanceDistribution& x, std::size_t substance) {
  if (substance >= x.substances) throw ShapeError("substance index out of range");
  const Eigen::MatrixXd b = substance_block(x, substance);
  Eigen::Index best = 0;
  b.rowwise().maxCoeff().maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

Eigen::VectorXd temporal_profile(const SubstanceDistribution& x, std::size_t voxel,
                                 std::size_t substance) {
  if (voxel >= x.voxels || substance >= x.substances) throw ShapeError("index out of range");
  Eigen::VectorXd p(static_cast<Eigen::Index>(x.frames()));
  for (std::size_t m = 0; m < x.frames(); ++m) p[static_cast<Eigen::Index>(m)] = x.at(m, voxel, substance);
  return p;
}

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("pearson: need equal lengths >= 2");
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double na = da.norm();
  const double nb = db.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return da.dot(db) / (na * nb);
}

std::size_t plateau_onset(const Eigen::Ref<const Eigen::VectorXd>& profile) {
  const Eigen::Index n = profile.size();
  if (n < 2) return 0;
  // Prefix sums of y and m*y make each candidate fit O(1).
  std::vector<double> py(n + 1, 0.0), pmy(n + 1, 0.0);
  for (Eigen::Index m = 0; m < n; ++m) {
    py[m + 1] = py[m] + profile[m];
    pmy[m + 1] = pmy[m] + static_cast<double>(m) * profile[m];
  }
  const double dn = static_cast<double>(n);
  const double sy = py[n];
  double best = -1.0;
  Eigen::Index best_t1 = n - 1;
  for (Eigen::Index t0 = 0; t0 + 1 < n; ++t0) {
    for (Eigen::Index t1 = t0 + 1; t1 < n; ++t1) {
      const double len = static_cast<double>(t1 - t0);
      const double tail = static_cast<double>(n - t1);
      const double sf = 0.5 * (len - 1.0) * len + len * tail;
      const double sff = (len - 1.0) * len * (2.0 * len - 1.0) / 6.0 + len * len * tail;
      const double sfy = (pmy[t1] - pmy[t0 + 1]) - static_cast<double>(t0) * (py[t1] - py[t0 + 1]) +
                         len * (py[n] - py[t1]);
      const double cov = sfy - sf * sy / dn;
      const double var = sff - sf * sf / dn;
      const double explained = cov * cov / var;
      if (explained > best * (1.0 + 1e-12)) {
        best = explained;
        best_t1 = t1;
      }
    }
  }
  return static_cast<std::size_t>(best_t1);
}

double coefficient_of_variation(const Eigen::Ref<const Eigen::VectorXd>& profile) {
  if (profile.size() < 2) return 0.0;
  const double mean = profile.mean();
  const double var = (profile.array() - mean).square().sum() / static_cast<double>(profile.size());
  return std::sqrt(var) / std::abs(mean);
}

void write_pgm(const std::filesystem::path& path, const SubstanceDistribution& x,
               const std::vector<int>& spatial_dims, std::size_t frame, std::size_t substance,
               double scale, int upsample) {
  if (spatial_dims.empty() || spatial_dims.size() > 2) {
    throw ShapeError("PGM snapshots support 1D and 2D grids only");
  }
  if (upsample < 1) throw ParameterError("upsample factor must be >= 1");
  if (frame >= x.frames()) throw ShapeError("snapshot frame out of range");
  const int rows = spatial_dims.size() == 2 ? spatial_dims[0] : 1;
  const int cols = spatial_dims.back();
  const int h = rows * upsample;
  const int w = cols * upsample;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (int i = 0; i < h; ++i) {
    for (int k = 0; k < w; ++k) {
      const auto r = static_cast<std::size_t>((i / upsample) * cols + k / upsample);
      const double v = scale > 0.0 ? x.at(frame, r, substance) / scale : 0.0;
      const auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      out.put(static_cast<char>(byte));
    }
  }
}

}  // namespace mrsi

#include "mrsi/forward_model.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace mrsi {

NormalMatrix::NormalMatrix(Eigen::MatrixXd factor, double shift)
    : factor_(std::move(factor)), shift_(shift) {
  if (!(shift_ > 0.0)) throw ParameterError("normal matrix shift must be > 0");
  const Eigen::Index n = factor_.rows();
  const Eigen::Index r = factor_.cols();
  low_rank_ = 2 * r < n;
  if (low_rank_) {
    Eigen::MatrixXd small = factor_.transpose() * factor_;
    small.diagonal().array() += shift_;
    llt_.compute(small);
  } else {
    llt_.compute(dense());
  }
  if (llt_.info() != Eigen::Success) throw Error("normal matrix factorization failed");
}

Eigen::VectorXd NormalMatrix::solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
  if (rhs.size() != factor_.rows()) throw ShapeError("normal matrix solve: size mismatch");
  if (!low_rank_) return llt_.solve(rhs);
  // Woodbury: (sI + FF^T)^{-1} b = (b - F (sI + F^T F)^{-1} F^T b) / s
  const Eigen::VectorXd t = llt_.solve(factor_.transpose() * rhs);
  return (rhs - factor_ * t) / shift_;
}

Eigen::VectorXd NormalMatrix::apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return factor_ * (factor_.transpose() * v) + shift_ * v;
}

Eigen::MatrixXd NormalMatrix::dense() const {
  Eigen::MatrixXd m = factor_ * factor_.transpose();
  m.diagonal().array() += shift_;
  return m;
}

ForwardModel::ForwardModel(AcquisitionGeometry geometry, BaseSpectraSet base)
    : geometry_(std::move(geometry)), base_(std::move(base)) {
  geometry_.validate();
  base_.check_geometry(geometry_);
  voxels_ = geometry_.voxel_count();
  const double s = geometry_.sign == DftSign::kForward ? -1.0 : 1.0;
  for (int n : geometry_.spatial_dims) {
    Eigen::MatrixXcd tw(n, n);
    for (int k = 0; k < n; ++k) {
      for (int r = 0; r < n; ++r) {
        // Reduce k*r mod n first so the phase stays exact for large grids.
        const double phase = s * 2.0 * std::numbers::pi * static_cast<double>((k * r) % n) / n;
        tw(k, r) = std::polar(1.0, phase);
      }
    }
    axis_twiddles_.push_back(std::move(tw));
  }
}

void ForwardModel::check_points(std::span<const SamplePoint> points) const {
  for (const auto& p : points) check_point(p, geometry_);
}

Eigen::VectorXcd ForwardModel::spatial_kernel(const SamplePoint& p) const {
  check_point(p, geometry_);
  Eigen::VectorXcd phi = Eigen::VectorXcd::Constant(
      static_cast<Eigen::Index>(voxels_), cplx(1.0 / std::sqrt(static_cast<double>(voxels_)), 0.0));
  // Row-major flattening: the last axis varies fastest.
  std::size_t stride = voxels_;
  for (std::size_t a = 0; a < axis_twiddles_.size(); ++a) {
    const auto n = static_cast<std::size_t>(geometry_.spatial_dims[a]);
    stride /= n;
    const auto row = axis_twiddles_[a].row(p.k[a] - 1);
    for (std::size_t r = 0; r < voxels_; ++r) {
      phi[static_cast<Eigen::Index>(r)] *= row[static_cast<Eigen::Index>((r / stride) % n)];
    }
  }
  return phi;
}

Eigen::VectorXcd ForwardModel::apply(const Eigen::Ref<const Eigen::VectorXd>& x_m,
                                     std::span<const SamplePoint> points) const {
  const auto J = substances();
  const auto n_ro = static_cast<Eigen::Index>(readout_points());
  if (static_cast<std::size_t>(x_m.size()) != unknowns()) {
    throw ShapeError("forward operator: x has " + std::to_string(x_m.size()) +
                     " entries, expected " + std::to_string(unknowns()));
  }
  check_points(points);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(points.size()) * n_ro);
  // x_m viewed as J x N (column r holds the J substances at voxel r).
  Eigen::Map<const Eigen::MatrixXd> xm(x_m.data(), static_cast<Eigen::Index>(J),
                                       static_cast<Eigen::Index>(voxels_));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Eigen::VectorXcd phi = spatial_kernel(points[p]);
    const Eigen::VectorXcd c = xm.cast<cplx>() * phi;
    auto seg = out.segment(static_cast<Eigen::Index>(p) * n_ro, n_ro);
    for (std::size_t j = 0; j < J; ++j) {
      const auto b = base_.fid_row(j, static_cast<std::size_t>(points[p].spectral - 1));
      seg += c[static_cast<Eigen::Index>(j)] * Eigen::Map<const Eigen::VectorXcd>(b.data(), n_ro);
    }
  }
  return out;
}

Eigen::VectorXd ForwardModel::adjoint(const Eigen::Ref<const Eigen::VectorXcd>& residual,
                                      std::span<const SamplePoint> points) const {
  const auto J = substances();
  const auto n_ro = static_cast<Eigen::Index>(readout_points());
  if (residual.size() != static_cast<Eigen::Index>(points.size()) * n_ro) {
    throw ShapeError("adjoint operator: residual has " + std::to_string(residual.size()) +
                     " samples, expected " + std::to_string(points.size() * readout_points()));
  }
  check_points(points);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns()));
  Eigen::Map<Eigen::MatrixXd> om(out.data(), static_cast<Eigen::Index>(J),
                                 static_cast<Eigen::Index>(voxels_));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Eigen::VectorXcd phi = spatial_kernel(points[p]);
    const auto seg = residual.segment(static_cast<Eigen::Index>(p) * n_ro, n_ro);
    Eigen::VectorXcd g(static_cast<Eigen::Index>(J));
    for (std::size_t j = 0; j < J; ++j) {
      const auto b = base_.fid_row(j, static_cast<std::size_t>(points[p].spectral - 1));
      g[static_cast<Eigen::Index>(j)] =
          Eigen::Map<const Eigen::VectorXcd>(b.data(), n_ro).dot(seg);  // b^H r
    }
    om += (g * phi.adjoint()).real();
  }
  return out;
}

Eigen::MatrixXd ForwardModel::gram_factor(std::span<const SamplePoint> points) const {
  const auto J = static_cast<Eigen::Index>(substances());
  const auto NJ = static_cast<Eigen::Index>(unknowns());
  const auto n_ro = static_cast<Eigen::Index>(readout_points());
  check_points(points);

  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index total = 0;
  for (const auto& p : points) {
    // Readouts for this point as columns: B is N_RO x J, G = B^H B.
    Eigen::MatrixXcd B(n_ro, J);
    for (Eigen::Index j = 0; j < J; ++j) {
      const auto b = base_.fid_row(static_cast<std::size_t>(j), static_cast<std::size_t>(p.spectral - 1));
      B.col(j) = Eigen::Map<const Eigen::VectorXcd>(b.data(), n_ro);
    }
    const Eigen::MatrixXcd G = B.adjoint() * B;
    Eigen::MatrixXd Gr(2 * J, 2 * J);
    Gr << G.real(), -G.imag(), G.imag(), G.real();

    // c_j = phi^T x_j, split into real and imaginary rows.
    const Eigen::VectorXcd phi = spatial_kernel(p);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * J, NJ);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(voxels_); ++r) {
      for (Eigen::Index j = 0; j < J; ++j) {
        S(j, r * J + j) = phi[r].real();
        S(J + j, r * J + j) = phi[r].imag();
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gr);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double cutoff = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam[i] > cutoff) keep.push_back(i);
    }
    Eigen::MatrixXd block(NJ, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      block.col(static_cast<Eigen::Index>(c)) =
          S.transpose() * eig.eigenvectors().col(keep[c]) * std::sqrt(lam[keep[c]]);
    }
    total += block.cols();
    blocks.push_back(std::move(block));
  }

  Eigen::MatrixXd F(NJ, total);
  Eigen::Index col = 0;
  for (const auto& b : blocks) {
    F.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  return F;
}

NormalMatrix ForwardModel::normal_matrix(std::span<const SamplePoint> points, double shift) const {
  if (!(shift > 0.0)) throw ParameterError("normal matrix shift must be > 0");
  return NormalMatrix(gram_factor(points), shift);
}

std::shared_ptr<const NormalMatrix> NormalMatrixCache::get(const std::vector<SamplePoint>& points) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(points); it != entries_.end()) return it->second;
  }
  auto built = std::make_shared<const NormalMatrix>(model_.normal_matrix(points, shift_));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(points, std::move(built));
  return it->second;
}

std::size_t NormalMatrixCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace mrsi

#include "mrsi/sampling.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace mrsi {
namespace {

// Joe & Kuo, new-joe-kuo-6.21201, dimensions 2..16: degree s, coefficient a,
// initial direction integers m_1..m_s. Dimension 1 is the van der Corput
// sequence (all m_i = 1).
struct Primitive {
  int s;
  std::uint32_t a;
  std::array<std::uint32_t, 8> m;
};

constexpr Primitive kJoeKuo[SobolSequence::kMaxDims - 1] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
};

constexpr int kBits = 32;

}  // namespace

SobolSequence::SobolSequence(int dims, std::uint64_t skip) : dims_(dims), index_(skip) {
  if (dims < 1 || dims > kMaxDims) {
    throw ParameterError("Sobol dimension " + std::to_string(dims) + " outside [1, " +
                         std::to_string(kMaxDims) + "]");
  }
  if (skip >= (std::uint64_t{1} << kBits)) throw ParameterError("Sobol skip exceeds 2^32");

  // directions_[d][i] holds V_{i+1} = m_{i+1} << (32 - (i+1)).
  for (int i = 0; i < kBits; ++i) directions_[0][i] = std::uint32_t{1} << (kBits - 1 - i);
  for (int d = 1; d < dims; ++d) {
    const Primitive& p = kJoeKuo[d - 1];
    auto& v = directions_[d];
    for (int i = 0; i < p.s; ++i) v[i] = p.m[i] << (kBits - 1 - i);
    for (int i = p.s; i < kBits; ++i) {
      v[i] = v[i - p.s] ^ (v[i - p.s] >> p.s);
      for (int k = 1; k < p.s; ++k) {
        if ((p.a >> (p.s - 1 - k)) & 1U) v[i] ^= v[i - k];
      }
    }
  }

  // Jump straight to the Gray-code state of index `skip`.
  const std::uint64_t gray = skip ^ (skip >> 1);
  for (int d = 0; d < dims; ++d) {
    std::uint32_t x = 0;
    for (int bit = 0; bit < kBits; ++bit) {
      if ((gray >> bit) & 1U) x ^= directions_[d][bit];
    }
    state_[d] = x;
  }
}

std::array<double, SobolSequence::kMaxDims> SobolSequence::next() {
  if (index_ >= (std::uint64_t{1} << kBits)) throw ParameterError("Sobol sequence exhausted");
  std::array<double, kMaxDims> point{};
  constexpr double kScale = 1.0 / 4294967296.0;
  for (int d = 0; d < dims_; ++d) point[d] = static_cast<double>(state_[d]) * kScale;
  // Advance: flip the direction number at the lowest zero bit of the index.
  const int c = std::countr_one(index_);
  for (int d = 0; d < dims_; ++d) state_[d] ^= directions_[d][c];
  ++index_;
  return point;
}

Eigen::MatrixXd sobol_sequence(std::size_t n, int d, std::uint64_t skip) {
  if (n < 1) throw ParameterError("Sobol sequence length must be >= 1");
  SobolSequence seq(d, skip);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = seq.next();
    for (int k = 0; k < d; ++k) out(static_cast<Eigen::Index>(i), k) = p[k];
  }
  return out;
}

int spectral_index_transform(double eta, int n_c, double psi) {
  if (!(eta >= 0.0 && eta < 1.0)) throw ParameterError("eta must lie in [0, 1)");
  if (!(psi > 0.0 && psi < 1.0)) throw ParameterError("psi must lie in (0, 1)");
  if (n_c < 1) throw ParameterError("n_c must be >= 1");
  const double num = std::log1p(-(1.0 - std::pow(psi, n_c)) * eta);
  const int d = static_cast<int>(std::floor(num / std::log(psi))) + 1;
  // Exact arithmetic keeps d in [1, n_c]; rounding right below eta = 1 can overshoot.
  return std::clamp(d, 1, n_c);
}

double default_psi(int n_c) {
  if (n_c < 1) throw ParameterError("n_c must be >= 1");
  return std::exp(-4.0 / n_c);
}

void SamplerConfig::validate() const {
  if (n_points < 1) throw ParameterError("n_points must be >= 1");
  if (psi && !(*psi > 0.0 && *psi < 1.0)) throw ParameterError("psi must lie in (0, 1)");
}

SamplingSchedule build_schedule(const SamplerConfig& config, const AcquisitionGeometry& geometry) {
  config.validate();
  geometry.validate();
  const int n_axes = 1 + static_cast<int>(geometry.spatial_dims.size());
  if (config.dims) {
    std::vector<int> expected{geometry.spectral_points};
    expected.insert(expected.end(), geometry.spatial_dims.begin(), geometry.spatial_dims.end());
    if (*config.dims != expected) {
      throw ConfigError("sampler.dims", "does not match the acquisition geometry");
    }
  }

  std::size_t gap_total = 0;
  for (const auto& g : config.gaps) gap_total += g.length;
  const std::size_t frames = config.n_points + gap_total;

  std::vector<bool> is_gap(frames, false);
  for (std::size_t i = 0; i < config.gaps.size(); ++i) {
    const auto& g = config.gaps[i];
    const std::string where = "sampler.gaps[" + std::to_string(i) + "]";
    if (g.length == 0) continue;
    if (g.start_frame + g.length > frames) {
      throw ConfigError(where, "gap starting at frame " + std::to_string(g.start_frame) +
                                   " extends past the last frame " + std::to_string(frames - 1));
    }
    for (std::size_t m = g.start_frame; m < g.start_frame + g.length; ++m) {
      if (is_gap[m]) throw ConfigError(where, "gaps overlap at frame " + std::to_string(m));
      is_gap[m] = true;
    }
  }

  const double psi = config.psi.value_or(default_psi(geometry.spectral_points));
  SobolSequence seq(n_axes, config.skip);
  std::vector<std::vector<SamplePoint>> out(frames);
  for (std::size_t m = 0; m < frames; ++m) {
    if (is_gap[m]) continue;
    const auto u = seq.next();
    SamplePoint p;
    p.spectral = spectral_index_transform(u[0], geometry.spectral_points, psi);
    for (std::size_t a = 0; a < geometry.spatial_dims.size(); ++a) {
      const int n = geometry.spatial_dims[a];
      p.k.push_back(std::min(static_cast<int>(std::floor(u[a + 1] * n)), n - 1) + 1);
    }
    out[m].push_back(std::move(p));
  }
  return SamplingSchedule(std::move(out), geometry.frame_interval_s);
}

}  // namespace mrsi

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mrsi/geometry.hpp"

namespace mrsi {

/// Unscrambled Sobol sequence in Gray-code order with the Joe & Kuo
/// (new-joe-kuo-6.21201) direction numbers, matching e.g.
/// scipy.stats.qmc.Sobol(scramble=False).
class SobolSequence {
 public:
  static constexpr int kMaxDims = 16;

  /// The first point returned is the one at index `skip` (index 0 is the origin).
  SobolSequence(int dims, std::uint64_t skip = 0);

  int dims() const { return dims_; }
  std::uint64_t index() const { return index_; }
  std::array<double, kMaxDims> next();

 private:
  int dims_;
  std::uint64_t index_;
  std::array<std::array<std::uint32_t, 32>, kMaxDims> directions_{};
  std::array<std::uint32_t, kMaxDims> state_{};
};

/// n x d matrix of Sobol points in [0,1)^d.
Eigen::MatrixXd sobol_sequence(std::size_t n, int d, std::uint64_t skip = 0);

/// Maps a uniform eta in [0,1) to an evolution index d in [1, n_c] with
/// P(d) proportional to psi^d.
int spectral_index_transform(double eta, int n_c, double psi);

/// psi = exp(-4 / n_c).
double default_psi(int n_c);

struct GapSpec {
  std::size_t start_frame = 0;
  std::size_t length = 0;
};

struct SamplerConfig {
  std::size_t n_points = 1024;
  std::optional<double> psi;  // defaults to default_psi(N_C)
  std::uint64_t skip = 0;
  std::vector<GapSpec> gaps;
  std::optional<std::vector<int>> dims;  // (N_C, spatial...), checked against the geometry

  void validate() const;
};

/// One Sobol-drawn point per acquired frame, in sequence order, with the
/// configured gap frames left empty. M = n_points + total gap length.
SamplingSchedule build_schedule(const SamplerConfig& config, const AcquisitionGeometry& geometry);

}  // namespace mrsi

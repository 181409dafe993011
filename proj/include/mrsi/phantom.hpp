#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mrsi/base_spectra.hpp"
#include "mrsi/forward_model.hpp"
#include "mrsi/geometry.hpp"

namespace mrsi {

/// min(rate * max(0, m - start_frame), cap)
struct RampProfile {
  double rate = 0.0;
  std::size_t start_frame = 0;
  double cap = 0.0;
};

struct ConstantProfile {
  double level = 0.0;
};

using Profile = std::variant<RampProfile, ConstantProfile>;

double profile_value(const Profile& p, std::size_t frame);

/// 2D absorption Lorentzian over (evolution, readout) spectral indices
/// (0-based, fractional allowed): amplitude / ((1 + u^2)(1 + v^2)) with
/// u = (f1 - c1)/w1, v = (f2 - c2)/w2.
struct Peak {
  std::array<double, 2> center{};
  std::array<double, 2> width{1.0, 1.0};
  double amplitude = 1.0;
};

struct SubstanceSpec {
  std::string label;
  std::vector<std::size_t> region;  // flat voxel indices (row-major over spatial_dims)
  Profile profile = ConstantProfile{};
  std::vector<Peak> peaks;
};

struct PhantomConfig {
  AcquisitionGeometry geometry;
  std::size_t frames = 1;
  std::vector<SubstanceSpec> substances;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

SubstanceDistribution make_phantom(const PhantomConfig& config);

BaseSpectraSet make_base_spectra(const PhantomConfig& config);

/// y_m = A_m x_m + noise, with independent N(0, sigma^2) real and imaginary
/// parts. Each frame draws from its own stream seeded by (seed, m).
SignalSet acquire(const SubstanceDistribution& truth, const ForwardModel& model,
                  const SamplingSchedule& schedule, double noise_sigma, std::uint64_t seed);

}  // namespace mrsi

#include "mrsi/phantom.hpp"

#include <cmath>
#include <random>

namespace mrsi {

double profile_value(const Profile& p, std::size_t frame) {
  return std::visit(
      [frame](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, RampProfile>) {
          const double elapsed =
              frame > v.start_frame ? static_cast<double>(frame - v.start_frame) : 0.0;
          return std::min(v.rate * elapsed, v.cap);
        } else {
          return v.level;
        }
      },
      p);
}

void PhantomConfig::validate() const {
  geometry.validate();
  if (frames < 1) throw ParameterError("phantom needs at least one frame");
  if (substances.empty()) throw ParameterError("phantom needs at least one substance");
  if (noise_sigma < 0.0) throw ParameterError("noise_sigma must be >= 0");
  const std::size_t n = geometry.voxel_count();
  for (const auto& s : substances) {
    for (std::size_t r : s.region) {
      if (r >= n) {
        throw ParameterError("substance '" + s.label + "': voxel " + std::to_string(r) +
                             " outside the grid");
      }
    }
    if (const auto* ramp = std::get_if<RampProfile>(&s.profile); ramp && ramp->cap < 0.0) {
      throw ParameterError("substance '" + s.label + "': ramp cap must be >= 0");
    }
    if (s.peaks.empty()) {
      throw ParameterError("substance '" + s.label + "' needs at least one spectral peak");
    }
    for (const auto& pk : s.peaks) {
      if (!(pk.width[0] > 0.0 && pk.width[1] > 0.0)) {
        throw ParameterError("substance '" + s.label + "': peak widths must be > 0");
      }
    }
  }
}

SubstanceDistribution make_phantom(const PhantomConfig& config) {
  config.validate();
  const std::size_t J = config.substances.size();
  SubstanceDistribution x(config.geometry.voxel_count(), J, config.frames);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& s = config.substances[j];
    for (std::size_t m = 0; m < config.frames; ++m) {
      const double v = profile_value(s.profile, m);
      for (std::size_t r : s.region) x.at(m, r, j) = v;
    }
  }
  return x;
}

BaseSpectraSet make_base_spectra(const PhantomConfig& config) {
  config.validate();
  const auto J = config.substances.size();
  const auto nc = static_cast<std::size_t>(config.geometry.spectral_points);
  const auto nro = static_cast<std::size_t>(config.geometry.readout_points);
  ComplexTensor spectra({J, nc, nro});
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < J; ++j) {
    const auto& s = config.substances[j];
    labels.push_back(s.label);
    for (std::size_t f1 = 0; f1 < nc; ++f1) {
      for (std::size_t f2 = 0; f2 < nro; ++f2) {
        double v = 0.0;
        for (const auto& pk : s.peaks) {
          const double u = (static_cast<double>(f1) - pk.center[0]) / pk.width[0];
          const double w = (static_cast<double>(f2) - pk.center[1]) / pk.width[1];
          v += pk.amplitude / ((1.0 + u * u) * (1.0 + w * w));
        }
        spectra[(j * nc + f1) * nro + f2] = cplx(v, 0.0);
      }
    }
  }
  return BaseSpectraSet(std::move(labels), std::move(spectra), config.geometry.sign);
}

SignalSet acquire(const SubstanceDistribution& truth, const ForwardModel& model,
                  const SamplingSchedule& schedule, double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0.0) throw ParameterError("noise_sigma must be >= 0");
  if (truth.frames() != schedule.frame_count()) {
    throw ShapeError("truth has " + std::to_string(truth.frames()) + " frames, schedule has " +
                     std::to_string(schedule.frame_count()));
  }
  if (truth.voxels != model.voxels() || truth.substances != model.substances()) {
    throw ShapeError("truth dimensions do not match the forward model");
  }
  schedule.validate(model.geometry());

  SignalSet out;
  out.frames.assign(schedule.frame_count(), Eigen::VectorXcd());
  const auto& acquired = schedule.acquired_frames();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(acquired.size()); ++i) {
    const std::size_t m = acquired[static_cast<std::size_t>(i)];
    Eigen::VectorXcd y = model.apply(truth.values.col(static_cast<Eigen::Index>(m)), schedule.points(m));
    if (noise_sigma > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(m >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> noise(0.0, noise_sigma);
      for (auto& v : y) {
        const double re = noise(rng);
        const double im = noise(rng);
        v += cplx(re, im);
      }
    }
    out.frames[m] = std::move(y);
  }
  return out;
}

}  // namespace mrsi

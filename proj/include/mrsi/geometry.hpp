#pragma once

#include <compare>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mrsi/tensor.hpp"

namespace mrsi {

/// Sign of the exponent used when going from spectrum/image to the signal
/// domain: kForward uses exp(-2*pi*i*...), kInverse uses exp(+2*pi*i*...).
enum class DftSign { kForward, kInverse };

struct AcquisitionGeometry {
  std::vector<int> spatial_dims;  // voxels per spatial axis
  int spectral_points = 1;        // N_C, indirect (evolution) axis
  int readout_points = 1;         // N_RO, direct axis, fully sampled per shot
  DftSign sign = DftSign::kForward;
  double frame_interval_s = 4.0;

  std::size_t voxel_count() const;
  void validate() const;

  bool operator==(const AcquisitionGeometry&) const = default;
};

/// One acquisition: an evolution index and a k-space coordinate, all 1-based.
/// Each point yields `readout_points` complex samples.
struct SamplePoint {
  int spectral = 1;
  std::vector<int> k;

  auto operator<=>(const SamplePoint&) const = default;
};

/// Throws ScheduleError if the point lies outside the geometry.
void check_point(const SamplePoint& p, const AcquisitionGeometry& g);

/// Frame-indexed acquisition plan. A frame with no points is a gap.
class SamplingSchedule {
 public:
  SamplingSchedule() = default;
  SamplingSchedule(std::vector<std::vector<SamplePoint>> frames, double frame_interval_s);

  std::size_t frame_count() const { return frames_.size(); }
  double frame_interval_s() const { return frame_interval_s_; }
  const std::vector<SamplePoint>& points(std::size_t m) const { return frames_.at(m); }
  bool acquired(std::size_t m) const { return !frames_.at(m).empty(); }

  /// Acquired frame indices D, ascending.
  const std::vector<std::size_t>& acquired_frames() const { return acquired_; }

  void validate(const AcquisitionGeometry& g) const;

  /// Same frames, with every frame not in `keep` turned into a gap.
  SamplingSchedule restricted_to(const std::vector<std::size_t>& keep) const;

  bool operator==(const SamplingSchedule& o) const {
    return frames_ == o.frames_ && frame_interval_s_ == o.frame_interval_s_;
  }

 private:
  std::vector<std::vector<SamplePoint>> frames_;
  std::vector<std::size_t> acquired_;
  double frame_interval_s_ = 4.0;
};

/// Measured readouts, one complex vector per frame (empty for gaps). For a
/// frame with P points the vector holds P consecutive blocks of N_RO samples.
struct SignalSet {
  std::vector<Eigen::VectorXcd> frames;

  void validate(const SamplingSchedule& schedule, const AcquisitionGeometry& g) const;

  /// Packs acquired frames into a (|D|, P*N_RO) tensor; requires the same P
  /// in every acquired frame.
  ComplexTensor to_tensor(const SamplingSchedule& schedule) const;
  static SignalSet from_tensor(const ComplexTensor& t, const SamplingSchedule& schedule,
                               const AcquisitionGeometry& g);
};

/// x(m, r, j): column m holds frame m with entry r*J + j.
struct SubstanceDistribution {
  Eigen::MatrixXd values;  // (N*J) x M
  std::size_t voxels = 0;
  std::size_t substances = 0;

  SubstanceDistribution() = default;
  SubstanceDistribution(std::size_t n_voxels, std::size_t n_substances, std::size_t n_frames);

  std::size_t frames() const { return static_cast<std::size_t>(values.cols()); }
  double& at(std::size_t m, std::size_t r, std::size_t j) { return values(r * substances + j, m); }
  double at(std::size_t m, std::size_t r, std::size_t j) const {
    return values(r * substances + j, m);
  }

  /// Tensor with dims (M, N, J).
  RealTensor to_tensor() const;
  static SubstanceDistribution from_tensor(const RealTensor& t);
};

}  // namespace mrsi

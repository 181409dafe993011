#include "mrsi/geometry.hpp"

#include <cmath>
#include <string>

namespace mrsi {

std::size_t AcquisitionGeometry::voxel_count() const {
  std::size_t n = 1;
  for (int d : spatial_dims) n *= static_cast<std::size_t>(d);
  return n;
}

void AcquisitionGeometry::validate() const {
  if (spatial_dims.empty()) throw ParameterError("geometry needs at least one spatial axis");
  for (int d : spatial_dims) {
    if (d < 1) throw ParameterError("spatial dimension must be >= 1");
  }
  if (spectral_points < 1) throw ParameterError("spectral_evolution_points must be >= 1");
  if (readout_points < 1) throw ParameterError("readout_points must be >= 1");
  if (!(frame_interval_s > 0.0) || !std::isfinite(frame_interval_s)) {
    throw ParameterError("frame_interval_s must be > 0");
  }
}

void check_point(const SamplePoint& p, const AcquisitionGeometry& g) {
  if (p.spectral < 1 || p.spectral > g.spectral_points) {
    throw ScheduleError("spectral index " + std::to_string(p.spectral) + " outside [1, " +
                        std::to_string(g.spectral_points) + "]");
  }
  if (p.k.size() != g.spatial_dims.size()) {
    throw ScheduleError("k-space coordinate has " + std::to_string(p.k.size()) +
                        " axes, geometry has " + std::to_string(g.spatial_dims.size()));
  }
  for (std::size_t a = 0; a < p.k.size(); ++a) {
    if (p.k[a] < 1 || p.k[a] > g.spatial_dims[a]) {
      throw ScheduleError("k index " + std::to_string(p.k[a]) + " outside [1, " +
                          std::to_string(g.spatial_dims[a]) + "] on axis " + std::to_string(a));
    }
  }
}

SamplingSchedule::SamplingSchedule(std::vector<std::vector<SamplePoint>> frames,
                                   double frame_interval_s)
    : frames_(std::move(frames)), frame_interval_s_(frame_interval_s) {
  for (std::size_t m = 0; m < frames_.size(); ++m) {
    if (!frames_[m].empty()) acquired_.push_back(m);
  }
}

void SamplingSchedule::validate(const AcquisitionGeometry& g) const {
  for (const auto& frame : frames_) {
    for (const auto& p : frame) check_point(p, g);
  }
}

SamplingSchedule SamplingSchedule::restricted_to(const std::vector<std::size_t>& keep) const {
  std::vector<std::vector<SamplePoint>> frames(frames_.size());
  for (std::size_t m : keep) frames.at(m) = frames_.at(m);
  return SamplingSchedule(std::move(frames), frame_interval_s_);
}

void SignalSet::validate(const SamplingSchedule& schedule, const AcquisitionGeometry& g) const {
  if (frames.size() != schedule.frame_count()) {
    throw ShapeError("signal set has " + std::to_string(frames.size()) + " frames, schedule has " +
                     std::to_string(schedule.frame_count()));
  }
  const auto n_ro = static_cast<Eigen::Index>(g.readout_points);
  for (std::size_t m = 0; m < frames.size(); ++m) {
    const auto expected = static_cast<Eigen::Index>(schedule.points(m).size()) * n_ro;
    if (frames[m].size() != expected) {
      throw ShapeError("frame " + std::to_string(m) + " carries " +
                       std::to_string(frames[m].size()) + " samples, expected " +
                       std::to_string(expected));
    }
    if (!frames[m].allFinite()) {
      throw ShapeError("frame " + std::to_string(m) + " has non-finite samples");
    }
  }
}

ComplexTensor SignalSet::to_tensor(const SamplingSchedule& schedule) const {
  const auto& acquired = schedule.acquired_frames();
  const std::size_t width = acquired.empty() ? 0 : static_cast<std::size_t>(frames.at(acquired[0]).size());
  ComplexTensor t({acquired.size(), width});
  for (std::size_t i = 0; i < acquired.size(); ++i) {
    const auto& f = frames.at(acquired[i]);
    if (static_cast<std::size_t>(f.size()) != width) {
      throw ShapeError("acquired frames differ in sample count; cannot pack as a 2D tensor");
    }
    std::copy(f.data(), f.data() + width, t.data() + i * width);
  }
  return t;
}

SignalSet SignalSet::from_tensor(const ComplexTensor& t, const SamplingSchedule& schedule,
                                 const AcquisitionGeometry& g) {
  const auto& acquired = schedule.acquired_frames();
  if (t.rank() != 2 || t.dim(0) != acquired.size()) {
    throw ShapeError("signal tensor must be (|D|, P*N_RO) with |D| = " +
                     std::to_string(acquired.size()));
  }
  SignalSet s;
  s.frames.assign(schedule.frame_count(), Eigen::VectorXcd());
  const std::size_t width = t.dim(1);
  for (std::size_t i = 0; i < acquired.size(); ++i) {
    s.frames[acquired[i]] = Eigen::Map<const Eigen::VectorXcd>(t.data() + i * width,
                                                               static_cast<Eigen::Index>(width));
  }
  s.validate(schedule, g);
  return s;
}

SubstanceDistribution::SubstanceDistribution(std::size_t n_voxels, std::size_t n_substances,
                                             std::size_t n_frames)
    : values(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_voxels * n_substances),
                                   static_cast<Eigen::Index>(n_frames))),
      voxels(n_voxels),
      substances(n_substances) {}

RealTensor SubstanceDistribution::to_tensor() const {
  RealTensor t({frames(), voxels, substances});
  std::copy(values.data(), values.data() + values.size(), t.data());
  return t;
}

SubstanceDistribution SubstanceDistribution::from_tensor(const RealTensor& t) {
  if (t.rank() != 3) throw ShapeError("substance distribution tensor must be (M, N, J)");
  SubstanceDistribution x(t.dim(1), t.dim(2), t.dim(0));
  std::copy(t.data(), t.data() + t.size(), x.values.data());
  if (!x.values.allFinite()) throw ShapeError("substance distribution has non-finite entries");
  return x;
}

}  // namespace mrsi

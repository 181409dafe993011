#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mrsi/base_spectra.hpp"
#include "mrsi/geometry.hpp"

namespace mrsi {

/// Solve-capable form of Re(A^H A) + shift*I for one frame's sample points.
///
/// Re(A^H A) has rank at most 2*P*J for P points, so it is stored as F*F^T
/// with F of size (N*J) x rank. When the rank is small relative to N*J the
/// solve goes through the Woodbury identity; otherwise the dense matrix is
/// Cholesky-factored.
class NormalMatrix {
 public:
  NormalMatrix(Eigen::MatrixXd factor, double shift);

  std::size_t size() const { return static_cast<std::size_t>(factor_.rows()); }
  double shift() const { return shift_; }
  bool low_rank() const { return low_rank_; }

  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::MatrixXd dense() const;

 private:
  Eigen::MatrixXd factor_;
  double shift_;
  bool low_rank_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// A_m = U_m F Theta_B for real substance maps on a Cartesian voxel grid.
///
/// The spatial DFT of each substance map is evaluated only at the sampled
/// k-space coordinates and combined with the cached base FIDs, so the full
/// (N_C x N_RO x N) signal is never formed.
class ForwardModel {
 public:
  ForwardModel(AcquisitionGeometry geometry, BaseSpectraSet base);

  const AcquisitionGeometry& geometry() const { return geometry_; }
  const BaseSpectraSet& base() const { return base_; }
  std::size_t voxels() const { return voxels_; }
  std::size_t substances() const { return base_.substance_count(); }
  std::size_t unknowns() const { return voxels_ * substances(); }
  std::size_t readout_points() const { return base_.readout_points(); }

  /// Unitary spatial Fourier kernel phi_k(r) over all voxels r.
  Eigen::VectorXcd spatial_kernel(const SamplePoint& p) const;

  Eigen::VectorXcd apply(const Eigen::Ref<const Eigen::VectorXd>& x_m,
                         std::span<const SamplePoint> points) const;

  /// Re(A^H r).
  Eigen::VectorXd adjoint(const Eigen::Ref<const Eigen::VectorXcd>& residual,
                          std::span<const SamplePoint> points) const;

  /// Re(A^H A) + shift*I. Throws ParameterError when shift <= 0.
  NormalMatrix normal_matrix(std::span<const SamplePoint> points, double shift) const;

  /// F with Re(A^H A) = F F^T.
  Eigen::MatrixXd gram_factor(std::span<const SamplePoint> points) const;

 private:
  void check_points(std::span<const SamplePoint> points) const;

  AcquisitionGeometry geometry_;
  BaseSpectraSet base_;
  std::size_t voxels_;
  std::vector<Eigen::MatrixXcd> axis_twiddles_;  // per axis: (k, r) -> exp(s*2*pi*i*k*r/n)
};

/// Normal-matrix factorizations keyed by the frame's point list. Safe for
/// concurrent lookups; insertion takes an exclusive lock.
class NormalMatrixCache {
 public:
  NormalMatrixCache(const ForwardModel& model, double shift) : model_(model), shift_(shift) {}

  std::shared_ptr<const NormalMatrix> get(const std::vector<SamplePoint>& points);
  std::size_t size() const;

 private:
  const ForwardModel& model_;
  double shift_;
  mutable std::shared_mutex mutex_;
  std::map<std::vector<SamplePoint>, std::shared_ptr<const NormalMatrix>> entries_;
};

}  // namespace mrsi

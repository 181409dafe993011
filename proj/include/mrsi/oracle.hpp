#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "mrsi/admm.hpp"

namespace mrsi {

struct OracleConfig {
  int max_iters = 200000;
  /// Stop when the objective decreased by less than this (relative) over `window` iterations.
  double tolerance = 1e-13;
  int window = 50;
  /// Dual step as a fraction of its admissible maximum.
  double dual_step_fraction = 0.9;
  std::size_t max_unknowns = 4096;

  void validate() const;
};

struct OracleResult {
  SubstanceDistribution x;
  double objective = 0.0;
  int iterations = 0;
};

/// Primal-dual forward-backward (Condat-Vu) solve of the same objective the
/// ADMM minimizes: gradient steps on the quadratic terms, soft-thresholding for
/// the l1 term on acquired frames, and a clipped dual variable for the l1 term
/// on frame differences. Refuses instances with more than `max_unknowns`.
OracleResult oracle_solve(const SignalSet& signals, const SamplingSchedule& schedule,
                          const ForwardModel& model, const Regularization& lambdas,
                          const OracleConfig& config = {});

struct KktReport {
  double residual = 0.0;       // norm of the minimal-norm subgradient
  double gradient_scale = 0.0; // ||grad of the data term at x = 0|| = ||Re(A^H y)||
  double scaled() const { return residual / std::max(gradient_scale, 1e-300); }
};

/// Distance from zero to the subdifferential of the objective at x. Entries
/// with magnitude <= zero_tol (of x or of its frame differences) are treated
/// as exact zeros. A negative zero_tol selects 1e-7 * max|x|.
KktReport kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& x, const SignalSet& signals,
                       const SamplingSchedule& schedule, const ForwardModel& model,
                       const Regularization& lambdas, double zero_tol = -1.0);

}  // namespace mrsi

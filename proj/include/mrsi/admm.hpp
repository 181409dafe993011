#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mrsi/forward_model.hpp"
#include "mrsi/geometry.hpp"

namespace mrsi {

/// Weights of the spatial l1 term and the elastic net on frame differences.
struct Regularization {
  double lambda_x = 1.0;
  double lambda_w1 = 1.0;
  double lambda_w2 = 1.0;

  void validate() const;
  auto operator<=>(const Regularization&) const = default;
};

struct SolverConfig {
  Regularization lambdas;
  double rho1 = 1e-3;
  double rho2 = 1e-1;
  double mu = 1e-3;
  int outer_iters = 1000;
  int inner_iters = 2;
  bool record_residuals = true;
  /// Stop once ||x - z|| / ||x|| falls below this; 0 runs the full budget.
  double stop_tol = 0.0;

  double gamma() const { return rho2 / rho1; }
  void validate() const;
};

struct ResidualRecord {
  double x_minus_z = 0.0;  // ||x^k - z^k||_2
  double z_delta = 0.0;    // ||z^k - z^{k-1}||_2
};

/// All iterates, stored frame-per-column: x, z, u, alpha, beta are (N*J) x M,
/// h, s, nu are (N*J) x (M-1).
struct SolverState {
  Eigen::MatrixXd x, z, u, alpha, beta;
  Eigen::MatrixXd h, s, nu;
  int iteration = 0;
  std::vector<ResidualRecord> residuals;
};

/// Lower-bidiagonal Cholesky factor of I + gamma * W^T W, W the first difference.
struct BandCholesky {
  std::vector<double> diag;     // L(m, m)
  std::vector<double> subdiag;  // L(m, m-1), m = 1..M-1

  std::size_t frames() const { return diag.size(); }
  Eigen::MatrixXd dense() const;
};

BandCholesky band_cholesky(std::size_t frames, double gamma);

inline double soft_threshold(double xi, double iota) {
  const double mag = std::abs(xi) - iota;
  if (mag <= 0.0) return 0.0;
  return xi > 0.0 ? mag : -mag;
}

Eigen::MatrixXd soft_threshold(const Eigen::Ref<const Eigen::MatrixXd>& xi, double iota);

/// Elastic-net prox on (s - nu): SoftThr((s-nu)/(1+lw2/rho2); lw1/(rho2+lw2)).
Eigen::MatrixXd update_h(const Eigen::Ref<const Eigen::MatrixXd>& s,
                         const Eigen::Ref<const Eigen::MatrixXd>& nu, const SolverConfig& config);

struct Projection {
  Eigen::MatrixXd z;  // (N*J) x M
  Eigen::MatrixXd s;  // (N*J) x (M-1), exactly z(:, m+1) - z(:, m)
};

/// Projection of (omega, q) onto {(z, s) : s = W z} in the metric
/// ||omega - z||^2 + gamma ||q - s||^2, via band forward/back substitution.
Projection project_constraint(const Eigen::Ref<const Eigen::MatrixXd>& omega,
                              const Eigen::Ref<const Eigen::MatrixXd>& q,
                              const BandCholesky& chol, double gamma);

/// 1/2 sum_{m in D} ||y_m - A_m x_m||^2 + lambda_x sum_{m in D} ||x_m||_1
///   + sum_{m < M} (lambda_w1 ||dx_m||_1 + 1/2 lambda_w2 ||dx_m||^2).
double objective_value(const Eigen::Ref<const Eigen::MatrixXd>& x, const ForwardModel& model,
                       const SamplingSchedule& schedule, const SignalSet& signals,
                       const Regularization& lambdas);

struct SolveResult {
  SubstanceDistribution x;
  std::vector<ResidualRecord> residuals;
  int iterations = 0;
};

/// Nested ADMM: outer splitting x = z, h = s with (z, s) on the difference
/// constraint set, inner splitting x = alpha for the per-frame l1 term.
class AdmmSolver {
 public:
  AdmmSolver(const ForwardModel& model, const SamplingSchedule& schedule, const SignalSet& signals,
             SolverConfig config);

  const SolverConfig& config() const { return config_; }
  const BandCholesky& cholesky() const { return chol_; }

  /// x_m = Re(A_m^H y_m) and z = x on acquired frames; everything else zero.
  SolverState initial_state() const;

  /// Step 1 for one frame: `inner_iters` rounds of the x / alpha / beta updates.
  void update_x_frame(std::size_t m, SolverState& state) const;

  /// One outer iteration (steps 1-4). Appends a residual record when enabled.
  void iterate(SolverState& state) const;

  SolveResult solve() const;
  SolveResult solve(SolverState state) const;

 private:
  const ForwardModel& model_;
  const SamplingSchedule& schedule_;
  const SignalSet& signals_;
  SolverConfig config_;
  BandCholesky chol_;
  Eigen::MatrixXd data_term_;  // Re(A_m^H y_m) per frame
  std::vector<std::shared_ptr<const NormalMatrix>> normal_;  // per frame, null for gaps
};

SolveResult solve(const SignalSet& signals, const SamplingSchedule& schedule,
                  const ForwardModel& model, const SolverConfig& config);

}  // namespace mrsi

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mrsi/admm.hpp"
#include "mrsi/forward_model.hpp"
#include "mrsi/geometry.hpp"

namespace mrsi {

struct CvPlan {
  std::vector<double> grid_x;
  std::vector<double> grid_w1;
  std::vector<double> grid_w2;
  /// Penalties and inner iterations for every CV solve; lambdas are overridden.
  SolverConfig base;
  int cv_outer_iters = 200;

  /// {1e-4, 1e-3, ..., 1e7} on every axis (12^3 combinations).
  static CvPlan paper_grid();
  /// {1e-3, 1e-1, 1e1, 1e3, 1e5} on every axis.
  static CvPlan coarse_grid();

  /// Lexicographic (lambda_x, lambda_w1, lambda_w2) enumeration of the grid.
  std::vector<Regularization> combinations() const;
  void validate() const;
};

struct Fold {
  SamplingSchedule schedule;
  SignalSet signals;
};

/// Splits acquired frames by acquisition-order parity: the 1st, 3rd, ...
/// readouts form fold 1, the 2nd, 4th, ... fold 2. Withheld frames become gaps.
std::pair<Fold, Fold> split_readouts(const SamplingSchedule& schedule, const SignalSet& signals);

/// RMSE (real and imaginary parts counted separately) between `test` readouts
/// and A_m x_m at the test fold's acquired frames.
double prediction_rmse(const Eigen::Ref<const Eigen::MatrixXd>& x, const Fold& test,
                       const ForwardModel& model);

/// Mean of the held-out RMSE for (train a, test b) and (train b, test a).
double cv_rmse(const Regularization& lambdas, const Fold& a, const Fold& b,
               const ForwardModel& model, const SolverConfig& config);

struct CvEntry {
  Regularization lambdas;
  double rmse = 0.0;
};

struct GridSearchResult {
  Regularization best;
  double best_rmse = 0.0;
  std::vector<CvEntry> table;  // in combinations() order
};

/// (completed, total)
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// Exhaustive 2-fold CV over the plan's grid. Ties go to the lexicographically
/// smallest lambda triple. `threads` <= 0 uses the OpenMP default.
GridSearchResult grid_search(const CvPlan& plan, const SamplingSchedule& schedule,
                             const SignalSet& signals, const ForwardModel& model,
                             const ProgressFn& progress = {}, int threads = 0);

/// Index of the best entry under the tie rule above.
std::size_t select_best(const std::vector<CvEntry>& table);

}  // namespace mrsi

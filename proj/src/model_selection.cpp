#include "mrsi/model_selection.hpp"

#include <atomic>
#include <cmath>
#include <mutex>

#include <omp.h>

namespace mrsi {
namespace {

std::vector<double> decades(int lo, int hi, int step = 1) {
  std::vector<double> v;
  for (int e = lo; e <= hi; e += step) v.push_back(std::pow(10.0, e));
  return v;
}

}  // namespace

CvPlan CvPlan::paper_grid() {
  CvPlan p;
  p.grid_x = p.grid_w1 = p.grid_w2 = decades(-4, 7);
  return p;
}

CvPlan CvPlan::coarse_grid() {
  CvPlan p;
  p.grid_x = p.grid_w1 = p.grid_w2 = decades(-3, 5, 2);
  return p;
}

std::vector<Regularization> CvPlan::combinations() const {
  std::vector<Regularization> out;
  out.reserve(grid_x.size() * grid_w1.size() * grid_w2.size());
  for (double lx : grid_x) {
    for (double l1 : grid_w1) {
      for (double l2 : grid_w2) out.push_back({lx, l1, l2});
    }
  }
  return out;
}

void CvPlan::validate() const {
  if (grid_x.empty() || grid_w1.empty() || grid_w2.empty()) {
    throw ParameterError("every CV grid axis needs at least one value");
  }
  for (const auto* g : {&grid_x, &grid_w1, &grid_w2}) {
    for (double v : *g) {
      if (!(v > 0.0)) throw ParameterError("CV grid values must be > 0");
    }
  }
  if (cv_outer_iters < 1) throw ParameterError("cv_outer_iters must be >= 1");
  base.validate();
}

std::pair<Fold, Fold> split_readouts(const SamplingSchedule& schedule, const SignalSet& signals) {
  const auto& acquired = schedule.acquired_frames();
  if (acquired.size() < 2) throw ShapeError("cross validation needs at least two readouts");
  if (signals.frames.size() != schedule.frame_count()) {
    throw ShapeError("signal set does not match the schedule");
  }
  std::vector<std::size_t> odd;
  std::vector<std::size_t> even;
  for (std::size_t i = 0; i < acquired.size(); ++i) {
    // i is 0-based, so readout number i+1 is odd when i is even.
    (i % 2 == 0 ? odd : even).push_back(acquired[i]);
  }
  const auto make = [&](const std::vector<std::size_t>& keep) {
    Fold f{schedule.restricted_to(keep), SignalSet{}};
    f.signals.frames.assign(schedule.frame_count(), Eigen::VectorXcd());
    for (std::size_t m : keep) f.signals.frames[m] = signals.frames[m];
    return f;
  };
  return {make(odd), make(even)};
}

double prediction_rmse(const Eigen::Ref<const Eigen::MatrixXd>& x, const Fold& test,
                       const ForwardModel& model) {
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t m : test.schedule.acquired_frames()) {
    const Eigen::VectorXcd pred =
        model.apply(x.col(static_cast<Eigen::Index>(m)), test.schedule.points(m));
    sq += (pred - test.signals.frames[m]).squaredNorm();
    count += 2 * static_cast<std::size_t>(pred.size());
  }
  if (count == 0) throw ShapeError("test fold has no readouts");
  return std::sqrt(sq / static_cast<double>(count));
}

double cv_rmse(const Regularization& lambdas, const Fold& a, const Fold& b,
               const ForwardModel& model, const SolverConfig& config) {
  SolverConfig c = config;
  c.lambdas = lambdas;
  c.record_residuals = false;
  const SolveResult ra = solve(a.signals, a.schedule, model, c);
  const SolveResult rb = solve(b.signals, b.schedule, model, c);
  return 0.5 * (prediction_rmse(ra.x.values, b, model) + prediction_rmse(rb.x.values, a, model));
}

std::size_t select_best(const std::vector<CvEntry>& table) {
  if (table.empty()) throw ParameterError("empty CV table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& c = table[i];
    const auto& b = table[best];
    if (c.rmse < b.rmse || (c.rmse == b.rmse && c.lambdas < b.lambdas)) best = i;
  }
  return best;
}

GridSearchResult grid_search(const CvPlan& plan, const SamplingSchedule& schedule,
                             const SignalSet& signals, const ForwardModel& model,
                             const ProgressFn& progress, int threads) {
  plan.validate();
  const auto [fold1, fold2] = split_readouts(schedule, signals);
  SolverConfig config = plan.base;
  config.outer_iters = plan.cv_outer_iters;

  const auto combos = plan.combinations();
  GridSearchResult out;
  out.table.resize(combos.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(combos.size()); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    double rmse;
    try {
      rmse = cv_rmse(combos[idx], fold1, fold2, model, config);
    } catch (const DivergenceError&) {
      rmse = std::numeric_limits<double>::infinity();
    }
    out.table[idx] = {combos[idx], rmse};
    const std::size_t n = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(n, combos.size());
    }
  }

  const std::size_t best = select_best(out.table);
  out.best = out.table[best].lambdas;
  out.best_rmse = out.table[best].rmse;
  return out;
}

}  // namespace mrsi

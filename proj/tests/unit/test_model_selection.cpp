#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "mrsi/model_selection.hpp"
#include "mrsi/phantom.hpp"
#include "oracles.hpp"

using namespace mrsi;

namespace {

ForwardModel scalar_model() {
  AcquisitionGeometry g;
  g.spatial_dims = {1};
  ComplexTensor spectra({1, 1, 1});
  spectra[0] = 1.0;
  return ForwardModel(g, BaseSpectraSet({"a"}, spectra, g.sign));
}

// Frames 0..M-1 with the listed ones as gaps; signal value m+1 in frame m.
std::pair<SamplingSchedule, SignalSet> scalar_series(std::size_t M, std::set<std::size_t> gaps) {
  std::vector<std::vector<SamplePoint>> frames(M);
  SignalSet y;
  for (std::size_t m = 0; m < M; ++m) {
    if (gaps.count(m)) {
      y.frames.emplace_back();
      continue;
    }
    frames[m] = {SamplePoint{1, {1}}};
    y.frames.push_back(Eigen::VectorXcd::Constant(1, cplx(static_cast<double>(m + 1), 0.0)));
  }
  return {SamplingSchedule(frames, 4.0), y};
}

}  // namespace

TEST_CASE("odd and even readouts form the two folds") {
  const auto [schedule, y] = scalar_series(5, {});
  const auto [f1, f2] = split_readouts(schedule, y);
  CHECK(f1.schedule.acquired_frames() == std::vector<std::size_t>{0, 2, 4});
  CHECK(f2.schedule.acquired_frames() == std::vector<std::size_t>{1, 3});
  CHECK(f1.schedule.frame_count() == 5);
  CHECK(f2.schedule.frame_count() == 5);
  CHECK(f1.signals.frames[1].size() == 0);
  CHECK(f2.signals.frames[3] == y.frames[3]);
}

TEST_CASE("parity follows acquisition order, not frame index") {
  const auto [schedule, y] = scalar_series(8, {1, 2, 5});
  const auto [f1, f2] = split_readouts(schedule, y);
  // acquired: 0, 3, 4, 6, 7
  CHECK(f1.schedule.acquired_frames() == std::vector<std::size_t>{0, 4, 7});
  CHECK(f2.schedule.acquired_frames() == std::vector<std::size_t>{3, 6});
  std::vector<std::size_t> all = f1.schedule.acquired_frames();
  all.insert(all.end(), f2.schedule.acquired_frames().begin(), f2.schedule.acquired_frames().end());
  std::sort(all.begin(), all.end());
  CHECK(all == schedule.acquired_frames());
}

TEST_CASE("two readouts split one and one; fewer is an error") {
  const auto [s2, y2] = scalar_series(2, {});
  const auto [a, b] = split_readouts(s2, y2);
  CHECK(a.schedule.acquired_frames().size() == 1);
  CHECK(b.schedule.acquired_frames().size() == 1);
  const auto [s1, y1] = scalar_series(3, {0, 2});
  CHECK_THROWS_AS(split_readouts(s1, y1), ShapeError);
}

TEST_CASE("zero estimate predicts the RMS of the withheld data") {
  const auto model = scalar_model();
  const auto [schedule, y] = scalar_series(4, {});
  const auto [f1, f2] = split_readouts(schedule, y);
  // f2 holds values 2 and 4 (real); imaginary parts count as zero samples.
  const double expect = std::sqrt((4.0 + 16.0) / 4.0);
  CHECK(prediction_rmse(Eigen::MatrixXd::Zero(1, 4), f2, model) == doctest::Approx(expect));
}

TEST_CASE("training-fold prediction error vanishes for noiseless full data") {
  PhantomConfig c;
  c.geometry.spatial_dims = {2, 2};
  c.geometry.spectral_points = 2;
  c.geometry.readout_points = 4;
  c.frames = 6;
  c.substances = {{"a", {1, 2}, RampProfile{0.2, 0, 1.0}, {Peak{{0.5, 1.0}, {1.0, 1.0}, 1.0}}}};
  const ForwardModel model(c.geometry, make_base_spectra(c));
  const SamplingSchedule schedule(std::vector<std::vector<SamplePoint>>(6, oracle::all_points(c.geometry)), 4.0);
  const auto y = acquire(make_phantom(c), model, schedule, 0.0, 0);
  const auto [f1, f2] = split_readouts(schedule, y);
  SolverConfig cfg;
  cfg.lambdas = {1e-9, 1e-9, 1e-9};
  cfg.outer_iters = 500;
  const auto r = solve(f1.signals, f1.schedule, model, cfg);
  CHECK(prediction_rmse(r.x.values, f1, model) < 1e-6);
}

TEST_CASE("grid plans") {
  const auto full = CvPlan::paper_grid();
  CHECK(full.grid_x.size() == 12);
  CHECK(full.grid_x.front() == 1e-4);
  CHECK(full.grid_x.back() == 1e7);
  CHECK(full.combinations().size() == 1728);
  const auto coarse = CvPlan::coarse_grid();
  CHECK(coarse.combinations().size() == 125);
  CHECK(full.cv_outer_iters == 200);

  const auto combos = full.combinations();
  CHECK(std::is_sorted(combos.begin(), combos.end()));
  CvPlan bad = coarse;
  bad.grid_w1 = {1.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = coarse;
  bad.grid_x.clear();
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("select_best tie rule ignores enumeration order") {
  std::vector<CvEntry> table{{{1.0, 1.0, 1.0}, 0.5}, {{0.1, 9.0, 9.0}, 0.5}, {{0.1, 1.0, 2.0}, 0.5}, {{5.0, 5.0, 5.0}, 0.7}};
  const Regularization expect{0.1, 1.0, 2.0};
  std::sort(table.begin(), table.end(), [](const CvEntry& a, const CvEntry& b) { return a.rmse < b.rmse; });
  do {
    CHECK(table[select_best(table)].lambdas == expect);
  } while (std::next_permutation(table.begin(), table.end(),
                                 [](const CvEntry& a, const CvEntry& b) { return a.lambdas < b.lambdas; }));
  CHECK_THROWS_AS(select_best({}), ParameterError);
}

TEST_CASE("grid search on a small instance") {
  PhantomConfig c;
  c.geometry.spatial_dims = {2, 2};
  c.geometry.spectral_points = 2;
  c.geometry.readout_points = 4;
  c.frames = 20;
  c.substances = {{"a", {0, 3}, RampProfile{0.1, 2, 1.0}, {Peak{{0.5, 1.0}, {1.0, 1.0}, 1.0}}}};
  const ForwardModel model(c.geometry, make_base_spectra(c));
  std::mt19937_64 rng(3);
  std::vector<std::vector<SamplePoint>> frames(20);
  for (auto& f : frames) f = oracle::random_points(rng, c.geometry, 2);
  const SamplingSchedule schedule(frames, 4.0);
  const auto y = acquire(make_phantom(c), model, schedule, 0.01, 1);

  CvPlan plan;
  plan.grid_x = {1e-3};
  plan.grid_w1 = {1e-3};
  plan.grid_w2 = {1e-2};
  plan.cv_outer_iters = 50;
  auto single = grid_search(plan, schedule, y, model);
  CHECK(single.table.size() == 1);
  CHECK(single.best == Regularization{1e-3, 1e-3, 1e-2});

  plan.grid_x = {1e-4, 1e-1, 1e2};
  plan.grid_w1 = {1e-3, 1e1};
  plan.grid_w2 = {1e-2};
  std::size_t calls = 0, last_total = 0;
  const auto res = grid_search(plan, schedule, y, model, [&](std::size_t, std::size_t total) {
    ++calls;
    last_total = total;
  });
  CHECK(res.table.size() == 6);
  CHECK(calls == 6);
  CHECK(last_total == 6);
  const auto combos = plan.combinations();
  for (std::size_t i = 0; i < combos.size(); ++i) {
    CHECK(res.table[i].lambdas == combos[i]);
    CHECK(std::isfinite(res.table[i].rmse));
    CHECK(res.table[i].rmse >= 0.0);
  }
  CHECK(res.table[select_best(res.table)].lambdas == res.best);
  // Deterministic regardless of thread scheduling.
  const auto again = grid_search(plan, schedule, y, model, {}, 1);
  for (std::size_t i = 0; i < combos.size(); ++i) CHECK(again.table[i].rmse == res.table[i].rmse);
  const auto [f1, f2] = split_readouts(schedule, y);
  SolverConfig cfg = plan.base;
  cfg.outer_iters = plan.cv_outer_iters;
  CHECK(cv_rmse(combos[2], f1, f2, model, cfg) == res.table[2].rmse);
}

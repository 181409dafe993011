#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mrsi/admm.hpp"
#include "mrsi/evaluation.hpp"
#include "mrsi/phantom.hpp"
#include "oracles.hpp"

using namespace mrsi;

namespace {

// A = 1: one voxel, one evolution point, one readout sample, unit spectrum.
ForwardModel scalar_model() {
  AcquisitionGeometry g;
  g.spatial_dims = {1};
  ComplexTensor spectra({1, 1, 1});
  spectra[0] = 1.0;
  return ForwardModel(g, BaseSpectraSet({"a"}, spectra, g.sign));
}

SignalSet scalar_signals(std::initializer_list<double> ys) {
  SignalSet s;
  for (double y : ys) {
    Eigen::VectorXcd v;
    if (!std::isnan(y)) v = Eigen::VectorXcd::Constant(1, cplx(y, 0.0));
    s.frames.push_back(v);
  }
  return s;
}

PhantomConfig desk_config(std::size_t frames) {
  PhantomConfig c;
  c.geometry.spatial_dims = {4, 4};
  c.geometry.spectral_points = 4;
  c.geometry.readout_points = 8;
  c.frames = frames;
  c.substances = {
      {"a", {5, 6, 9}, RampProfile{0.05, 4, 1.0}, {Peak{{1.0, 2.0}, {0.8, 1.0}, 1.0}}},
      {"b", {0, 10, 15}, ConstantProfile{0.7}, {Peak{{2.5, 6.0}, {0.8, 1.0}, 1.0}}},
  };
  return c;
}

}  // namespace

TEST_CASE("soft threshold definitional cases") {
  CHECK(soft_threshold(0.5, 0.2) == doctest::Approx(0.3));
  CHECK(soft_threshold(-0.5, 0.2) == doctest::Approx(-0.3));
  CHECK(soft_threshold(0.1, 0.2) == 0.0);
  CHECK(soft_threshold(-0.2, 0.2) == 0.0);
  CHECK(soft_threshold(3.0, 0.0) == 3.0);
  Eigen::MatrixXd m(1, 3);
  m << 0.5, -0.5, 0.1;
  const Eigen::MatrixXd r = soft_threshold(m, 0.2);
  CHECK(r(0, 0) == doctest::Approx(0.3));
  CHECK(r(0, 1) == doctest::Approx(-0.3));
  CHECK(r(0, 2) == 0.0);
  CHECK_THROWS_AS(soft_threshold(m, -1.0), ParameterError);
}

TEST_CASE("band cholesky worked example") {
  const auto c = band_cholesky(3, 1.0);
  CHECK(c.diag[0] == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK(c.diag[1] == doctest::Approx(1.58114).epsilon(1e-5));
  CHECK(c.diag[2] == doctest::Approx(1.26491).epsilon(1e-5));
  CHECK(c.subdiag[0] == doctest::Approx(-0.70711).epsilon(1e-5));
  CHECK(c.subdiag[1] == doctest::Approx(-0.63246).epsilon(1e-5));
  Eigen::Matrix3d expect;
  expect << 2, -1, 0, -1, 3, -1, 0, -1, 2;
  const Eigen::MatrixXd L = c.dense();
  CHECK((L * L.transpose() - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("band cholesky reassembles I + gamma W^T W") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lg(-3.0, 3.0);
  for (std::size_t M = 2; M <= 64; ++M) {
    const double gamma = std::pow(10.0, lg(rng));
    const auto c = band_cholesky(M, gamma);
    const Eigen::MatrixXd W = oracle::difference_matrix(static_cast<Eigen::Index>(M));
    const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(M, M) + gamma * W.transpose() * W;
    const Eigen::MatrixXd L = c.dense();
    CHECK((L * L.transpose() - H).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd Ld = H.llt().matrixL();
    CHECK((L - Ld).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, Ld.cwiseAbs().maxCoeff()));
    for (double d : c.diag) CHECK(d > 0.0);
  }
}

TEST_CASE("band cholesky limits and errors") {
  const auto c = band_cholesky(5, 1e-14);
  CHECK((c.dense() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(band_cholesky(1, 1.0), ParameterError);
  CHECK_THROWS_AS(band_cholesky(4, 0.0), ParameterError);
  CHECK_THROWS_AS(band_cholesky(4, -2.0), ParameterError);
}

TEST_CASE("update_h hand evaluation") {
  SolverConfig cfg;
  cfg.lambdas = {0.0, 1.0, 1.0};
  cfg.rho2 = 1.0;
  Eigen::MatrixXd s(1, 2), nu = Eigen::MatrixXd::Zero(1, 2);
  s << 2.0, 0.5;
  // (s - nu) / 2 = (1, 0.25), threshold 1 / (1 * 2) = 0.5.
  const Eigen::MatrixXd h = update_h(s, nu, cfg);
  CHECK(h(0, 0) == doctest::Approx(0.5));
  CHECK(h(0, 1) == 0.0);

  cfg.lambdas = {0.0, 0.0, 0.0};
  Eigen::MatrixXd nu2(1, 2);
  nu2 << 0.25, -1.0;
  CHECK((update_h(s, nu2, cfg) - (s - nu2)).norm() == 0.0);

  cfg.lambdas = {0.0, 1e30, 1.0};
  CHECK(update_h(s, nu2, cfg).norm() == 0.0);
}

TEST_CASE("update_h satisfies its first-order condition") {
  // h minimizes lw1 |h| + lw2/2 h^2 + rho2/2 (h - (s - nu))^2.
  std::mt19937_64 rng(2);
  SolverConfig cfg;
  cfg.lambdas = {0.0, 0.3, 0.7};
  cfg.rho2 = 0.4;
  const Eigen::MatrixXd s = Eigen::MatrixXd::Random(6, 9) * 3.0;
  const Eigen::MatrixXd nu = Eigen::MatrixXd::Random(6, 9);
  const Eigen::MatrixXd h = update_h(s, nu, cfg);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double v = h.data()[i];
    const double g = cfg.lambdas.lambda_w2 * v + cfg.rho2 * (v - (s.data()[i] - nu.data()[i]));
    const double lw1 = cfg.lambdas.lambda_w1;
    const double res = v != 0.0 ? std::abs(g + lw1 * (v > 0 ? 1.0 : -1.0)) : std::max(0.0, std::abs(g) - lw1);
    CHECK(res <= 1e-8);
  }
}

TEST_CASE("projection of a feasible point is the point") {
  const auto c = band_cholesky(2, 1.0);
  Eigen::MatrixXd omega(1, 2), q = Eigen::MatrixXd::Zero(1, 1);
  omega << 1.0, 1.0;
  const auto p = project_constraint(omega, q, c, 1.0);
  CHECK(std::abs(p.z(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(p.z(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(p.s(0, 0)) < 1e-15);
}

TEST_CASE("projection matches the dense oracle and satisfies s = Wz exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lg(-2.0, 2.0);
  for (Eigen::Index M : {2, 3, 8, 17}) {
    const double gamma = std::pow(10.0, lg(rng));
    const auto c = band_cholesky(static_cast<std::size_t>(M), gamma);
    const Eigen::MatrixXd omega = Eigen::MatrixXd::Random(5, M);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Random(5, M - 1);
    const auto p = project_constraint(omega, q, c, gamma);
    CHECK((p.z - oracle::dense_projection(omega, q, gamma)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index m = 0; m + 1 < M; ++m) {
      for (Eigen::Index r = 0; r < 5; ++r) CHECK(p.s(r, m) == p.z(r, m + 1) - p.z(r, m));
    }
    // Gradient of ||omega - z||^2 + gamma ||q - Wz||^2 vanishes.
    const Eigen::MatrixXd W = oracle::difference_matrix(M);
    const Eigen::MatrixXd grad = (p.z - omega) + gamma * (p.z * W.transpose() - q) * W;
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-8);
  }
  const auto c = band_cholesky(4, 1.0);
  CHECK_THROWS_AS(project_constraint(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 2), c, 1.0), ShapeError);
  CHECK_THROWS_AS(project_constraint(Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Zero(3, 3), c, 1.0), ShapeError);
}

TEST_CASE("update_x_frame scalar normal equation") {
  const auto model = scalar_model();
  const SamplingSchedule schedule({{SamplePoint{1, {1}}}}, 4.0);
  const auto y = scalar_signals({2.0});
  SolverConfig cfg;
  cfg.rho1 = cfg.mu = 1.0;
  cfg.inner_iters = 1;
  cfg.lambdas = {0.1, 0.0, 0.0};
  const AdmmSolver solver(model, schedule, y, cfg);
  auto st = solver.initial_state();
  CHECK(st.x(0, 0) == doctest::Approx(2.0));
  st.z.setZero();
  solver.update_x_frame(0, st);
  CHECK(st.x(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("update_x_frame on a gap frame keeps a consistent point fixed") {
  const auto model = scalar_model();
  const SamplingSchedule schedule({{SamplePoint{1, {1}}}, {}}, 4.0);
  const auto y = scalar_signals({1.0, std::nan("")});
  SolverConfig cfg;
  cfg.inner_iters = 3;
  const AdmmSolver solver(model, schedule, y, cfg);
  auto st = solver.initial_state();
  CHECK(st.x(0, 1) == 0.0);
  st.z(0, 1) = 0.75;
  st.u(0, 1) = 0.0;
  st.alpha(0, 1) = 0.75;
  st.beta(0, 1) = 0.0;
  solver.update_x_frame(1, st);
  CHECK(st.x(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(st.beta(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("inner loop converges to the x-subproblem minimizer") {
  // min_x 1/2 ||y - Ax||^2 + lx ||x||_1 + rho1/2 ||x - (z - u)||^2 on a 2x2 grid.
  std::mt19937_64 rng(4);
  AcquisitionGeometry g;
  g.spatial_dims = {2, 2};
  g.spectral_points = 2;
  g.readout_points = 4;
  const ForwardModel model(g, BaseSpectraSet({"a"}, oracle::random_spectra(rng, 1, 2, 4), g.sign));
  const std::vector<SamplePoint> pts{{1, {1, 2}}, {2, {2, 2}}};
  const SamplingSchedule schedule({pts}, 4.0);
  SignalSet y;
  y.frames = {oracle::random_complex(rng, 8)};
  SolverConfig cfg;
  cfg.rho1 = 0.5;
  cfg.mu = 0.5;
  cfg.inner_iters = 20000;
  cfg.lambdas = {0.2, 0.0, 0.0};
  const AdmmSolver solver(model, schedule, y, cfg);
  auto st = solver.initial_state();
  st.z = oracle::random_real(rng, 4);
  st.u = oracle::random_real(rng, 4) * 0.1;
  solver.update_x_frame(0, st);
  const Eigen::VectorXd x = st.alpha.col(0);
  CHECK((st.x.col(0) - x).norm() < 1e-9);
  const Eigen::MatrixXcd A = oracle::dense_forward(model, pts);
  const Eigen::VectorXd g_smooth =
      (A.adjoint() * (A * x.cast<cplx>() - y.frames[0])).real() + cfg.rho1 * (x - (st.z.col(0) - st.u.col(0)));
  double res2 = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double lx = cfg.lambdas.lambda_x;
    const double r = x[i] != 0.0 ? g_smooth[i] + lx * (x[i] > 0 ? 1.0 : -1.0) : std::max(0.0, std::abs(g_smooth[i]) - lx);
    res2 += r * r;
  }
  CHECK(std::sqrt(res2) < 1e-6);
}

TEST_CASE("objective value examples") {
  const auto model = scalar_model();
  const SamplingSchedule one({{SamplePoint{1, {1}}}}, 4.0);
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  CHECK(objective_value(x, model, one, scalar_signals({1.0}), {2.0, 5.0, 5.0}) == doctest::Approx(2.0));
  x << 0.0;
  CHECK(objective_value(x, model, one, scalar_signals({0.0}), {1.0, 1.0, 1.0}) == 0.0);

  // Constant in time: both difference terms vanish; l1 counts acquired frames only.
  const SamplingSchedule three({{SamplePoint{1, {1}}}, {}, {SamplePoint{1, {1}}}}, 4.0);
  Eigen::MatrixXd xc = Eigen::MatrixXd::Constant(1, 3, 2.0);
  const auto y3 = scalar_signals({2.0, std::nan(""), 2.0});
  CHECK(objective_value(xc, model, three, y3, {0.5, 7.0, 7.0}) == doctest::Approx(2.0));
  xc(0, 1) = 3.0;  // differences +1, -1: lw1 * 2 + lw2/2 * 2
  CHECK(objective_value(xc, model, three, y3, {0.5, 0.25, 1.0}) == doctest::Approx(2.0 + 0.5 + 1.0));
  CHECK_THROWS_AS(objective_value(Eigen::MatrixXd::Zero(1, 2), model, three, y3, {}), ShapeError);
}

TEST_CASE("zero data gives the zero solution") {
  const auto c = desk_config(6);
  const ForwardModel model(c.geometry, make_base_spectra(c));
  std::mt19937_64 rng(5);
  std::vector<std::vector<SamplePoint>> frames(6);
  for (auto& f : frames) f = oracle::random_points(rng, c.geometry, 2);
  const SamplingSchedule schedule(frames, 4.0);
  SignalSet y;
  for (int m = 0; m < 6; ++m) y.frames.push_back(Eigen::VectorXcd::Zero(16));
  SolverConfig cfg;
  cfg.outer_iters = 20;
  cfg.lambdas = {0.1, 0.1, 0.1};
  const auto r = solve(y, schedule, model, cfg);
  CHECK(r.x.values.norm() == 0.0);
  CHECK(objective_value(r.x.values, model, schedule, y, cfg.lambdas) == 0.0);
}

TEST_CASE("noiseless fully sampled desk instance recovers the truth") {
  const auto c = desk_config(32);
  const auto truth = make_phantom(c);
  const ForwardModel model(c.geometry, make_base_spectra(c));
  const SamplingSchedule schedule(std::vector<std::vector<SamplePoint>>(32, oracle::all_points(c.geometry)), 4.0);
  const auto y = acquire(truth, model, schedule, 0.0, 0);
  SolverConfig cfg;
  cfg.lambdas = {1e-6, 1e-6, 1e-6};
  cfg.outer_iters = 300;
  const auto r = solve(y, schedule, model, cfg);
  CHECK(normalized_rmse(r.x, truth, 0) <= 1e-2);
  CHECK(normalized_rmse(r.x, truth, 1) <= 1e-2);
}

TEST_CASE("solver is deterministic and logs one residual per iteration") {
  const auto c = desk_config(12);
  const auto truth = make_phantom(c);
  const ForwardModel model(c.geometry, make_base_spectra(c));
  std::mt19937_64 rng(6);
  std::vector<std::vector<SamplePoint>> frames(12);
  for (auto& f : frames) f = oracle::random_points(rng, c.geometry, 3);
  frames[4].clear();
  const SamplingSchedule schedule(frames, 4.0);
  const auto y = acquire(truth, model, schedule, 0.01, 9);
  SolverConfig cfg;
  cfg.outer_iters = 50;
  cfg.lambdas = {1e-3, 1e-2, 1e-2};
  const auto a = solve(y, schedule, model, cfg);
  const auto b = solve(y, schedule, model, cfg);
  CHECK(a.x.values == b.x.values);
  CHECK(a.residuals.size() == 50);
  CHECK(a.iterations == 50);
  CHECK(a.x.values.col(4).norm() > 0.0);  // gap frame filled from neighbours

  cfg.record_residuals = false;
  CHECK(solve(y, schedule, model, cfg).residuals.empty());

  cfg.record_residuals = true;
  cfg.outer_iters = 100000;
  cfg.stop_tol = 1e-3;
  const auto early = solve(y, schedule, model, cfg);
  CHECK(early.iterations < 100000);
  const auto& last = early.residuals.back();
  CHECK(last.x_minus_z / early.x.values.norm() < 1e-3);
}

TEST_CASE("non-finite iterates raise a divergence error with the iteration") {
  const auto model = scalar_model();
  const SamplingSchedule schedule({{SamplePoint{1, {1}}}, {SamplePoint{1, {1}}}}, 4.0);
  const auto y = scalar_signals({1.0, 1.0});
  SolverConfig cfg;
  cfg.outer_iters = 5;
  const AdmmSolver solver(model, schedule, y, cfg);
  auto st = solver.initial_state();
  st.u(0, 1) = std::numeric_limits<double>::infinity();
  try {
    solver.solve(st);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() == 1);
  }
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.gamma() == doctest::Approx(100.0));
  cfg.rho1 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.inner_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.lambdas.lambda_w1 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

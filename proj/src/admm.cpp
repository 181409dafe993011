#include "mrsi/admm.hpp"

#include <cmath>
#include <string>

namespace mrsi {

void Regularization::validate() const {
  if (!(lambda_x >= 0.0) || !(lambda_w1 >= 0.0) || !(lambda_w2 >= 0.0)) {
    throw ParameterError("regularization weights must be >= 0");
  }
}

void SolverConfig::validate() const {
  lambdas.validate();
  if (!(rho1 > 0.0) || !(rho2 > 0.0) || !(mu > 0.0)) {
    throw ParameterError("penalty parameters rho1, rho2, mu must be > 0");
  }
  if (outer_iters < 1 || inner_iters < 1) throw ParameterError("iteration counts must be >= 1");
  if (stop_tol < 0.0) throw ParameterError("stop_tol must be >= 0");
}

Eigen::MatrixXd BandCholesky::dense() const {
  const auto M = static_cast<Eigen::Index>(diag.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index m = 0; m < M; ++m) {
    L(m, m) = diag[static_cast<std::size_t>(m)];
    if (m > 0) L(m, m - 1) = subdiag[static_cast<std::size_t>(m - 1)];
  }
  return L;
}

BandCholesky band_cholesky(std::size_t frames, double gamma) {
  if (frames < 2) throw ParameterError("band_cholesky needs at least two frames");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be > 0");
  BandCholesky c;
  c.diag.resize(frames);
  c.subdiag.resize(frames - 1);
  // I + gamma W^T W: diagonal (1+g, 1+2g, ..., 1+2g, 1+g), off-diagonal -g.
  c.diag[0] = std::sqrt(1.0 + gamma);
  for (std::size_t m = 1; m < frames; ++m) {
    const double a = (m + 1 == frames) ? 1.0 + gamma : 1.0 + 2.0 * gamma;
    c.subdiag[m - 1] = -gamma / c.diag[m - 1];
    c.diag[m] = std::sqrt(a - c.subdiag[m - 1] * c.subdiag[m - 1]);
  }
  return c;
}

Eigen::MatrixXd soft_threshold(const Eigen::Ref<const Eigen::MatrixXd>& xi, double iota) {
  if (iota < 0.0) throw ParameterError("soft threshold must be >= 0");
  return xi.unaryExpr([iota](double v) { return soft_threshold(v, iota); });
}

Eigen::MatrixXd update_h(const Eigen::Ref<const Eigen::MatrixXd>& s,
                         const Eigen::Ref<const Eigen::MatrixXd>& nu, const SolverConfig& config) {
  const double scale = 1.0 + config.lambdas.lambda_w2 / config.rho2;
  return soft_threshold((s - nu) / scale, config.lambdas.lambda_w1 / (config.rho2 * scale));
}

Projection project_constraint(const Eigen::Ref<const Eigen::MatrixXd>& omega,
                              const Eigen::Ref<const Eigen::MatrixXd>& q, const BandCholesky& chol,
                              double gamma) {
  const auto M = static_cast<Eigen::Index>(chol.frames());
  if (omega.cols() != M || q.cols() != M - 1 || q.rows() != omega.rows()) {
    throw ShapeError("project_constraint: omega must be n x M and q n x (M-1) with M = " +
                     std::to_string(M));
  }
  const auto& L = chol.diag;
  const auto& Ls = chol.subdiag;
  const auto idx = [](Eigen::Index m) { return static_cast<std::size_t>(m); };

  // b = omega + gamma W^T q
  Eigen::MatrixXd b = omega;
  b.col(0) -= gamma * q.col(0);
  b.col(M - 1) += gamma * q.col(M - 2);
  for (Eigen::Index m = 1; m < M - 1; ++m) b.col(m) += gamma * (q.col(m - 1) - q.col(m));

  // L g = b
  Eigen::MatrixXd& g = b;
  g.col(0) /= L[0];
  for (Eigen::Index m = 1; m < M; ++m) {
    g.col(m) = (g.col(m) - Ls[idx(m - 1)] * g.col(m - 1)) / L[idx(m)];
  }

  // L^T z = g
  Projection out;
  out.z.resize(omega.rows(), M);
  out.z.col(M - 1) = g.col(M - 1) / L[idx(M - 1)];
  for (Eigen::Index m = M - 2; m >= 0; --m) {
    out.z.col(m) = (g.col(m) - Ls[idx(m)] * out.z.col(m + 1)) / L[idx(m)];
  }
  out.s = out.z.rightCols(M - 1) - out.z.leftCols(M - 1);
  return out;
}

double objective_value(const Eigen::Ref<const Eigen::MatrixXd>& x, const ForwardModel& model,
                       const SamplingSchedule& schedule, const SignalSet& signals,
                       const Regularization& lambdas) {
  const auto M = static_cast<Eigen::Index>(schedule.frame_count());
  if (x.cols() != M || x.rows() != static_cast<Eigen::Index>(model.unknowns())) {
    throw ShapeError("objective_value: x has the wrong shape");
  }
  double data = 0.0;
  double l1 = 0.0;
  for (std::size_t m : schedule.acquired_frames()) {
    const auto col = x.col(static_cast<Eigen::Index>(m));
    data += (signals.frames.at(m) - model.apply(col, schedule.points(m))).squaredNorm();
    l1 += col.lpNorm<1>();
  }
  double tv = 0.0;
  double smooth = 0.0;
  if (M > 1) {
    const Eigen::MatrixXd dx = x.rightCols(M - 1) - x.leftCols(M - 1);
    tv = dx.lpNorm<1>();
    smooth = dx.squaredNorm();
  }
  return 0.5 * data + lambdas.lambda_x * l1 + lambdas.lambda_w1 * tv +
         0.5 * lambdas.lambda_w2 * smooth;
}

AdmmSolver::AdmmSolver(const ForwardModel& model, const SamplingSchedule& schedule,
                       const SignalSet& signals, SolverConfig config)
    : model_(model), schedule_(schedule), signals_(signals), config_(config) {
  config_.validate();
  schedule_.validate(model_.geometry());
  signals_.validate(schedule_, model_.geometry());
  const std::size_t M = schedule_.frame_count();
  if (M < 1) throw ShapeError("schedule has no frames");
  if (M >= 2) chol_ = band_cholesky(M, config_.gamma());

  const auto NJ = static_cast<Eigen::Index>(model_.unknowns());
  data_term_ = Eigen::MatrixXd::Zero(NJ, static_cast<Eigen::Index>(M));
  normal_.assign(M, nullptr);
  NormalMatrixCache cache(model_, config_.rho1 + config_.mu);
  for (std::size_t m : schedule_.acquired_frames()) {
    data_term_.col(static_cast<Eigen::Index>(m)) =
        model_.adjoint(signals_.frames[m], schedule_.points(m));
    normal_[m] = cache.get(schedule_.points(m));
  }
}

SolverState AdmmSolver::initial_state() const {
  const auto NJ = static_cast<Eigen::Index>(model_.unknowns());
  const auto M = static_cast<Eigen::Index>(schedule_.frame_count());
  SolverState st;
  st.x = data_term_;
  st.z = st.x;
  st.u = st.alpha = st.beta = Eigen::MatrixXd::Zero(NJ, M);
  st.h = st.s = st.nu = Eigen::MatrixXd::Zero(NJ, std::max<Eigen::Index>(M - 1, 0));
  return st;
}

void AdmmSolver::update_x_frame(std::size_t m, SolverState& st) const {
  const auto c = static_cast<Eigen::Index>(m);
  const double rho1 = config_.rho1;
  const double mu = config_.mu;
  const double thr = config_.lambdas.lambda_x / mu;
  const bool acquired = schedule_.acquired(m);
  if (acquired && !normal_[m]) throw Error("missing normal-matrix factorization for frame " + std::to_string(m));

  auto x = st.x.col(c);
  auto alpha = st.alpha.col(c);
  auto beta = st.beta.col(c);
  const Eigen::VectorXd anchor = rho1 * (st.z.col(c) - st.u.col(c));
  for (int it = 0; it < config_.inner_iters; ++it) {
    if (acquired) {
      x = normal_[m]->solve(data_term_.col(c) + anchor + mu * (alpha - beta));
      alpha = (x + beta).unaryExpr([thr](double v) { return soft_threshold(v, thr); });
    } else {
      // No data and no l1 term on gap frames.
      x = (anchor + mu * (alpha - beta)) / (rho1 + mu);
      alpha = x + beta;
    }
    beta += x - alpha;
  }
}

void AdmmSolver::iterate(SolverState& st) const {
  const auto M = static_cast<Eigen::Index>(schedule_.frame_count());

  // Step 1: independent per frame.
#pragma omp parallel for schedule(static)
  for (Eigen::Index m = 0; m < M; ++m) update_x_frame(static_cast<std::size_t>(m), st);

  const Eigen::MatrixXd z_prev = st.z;
  if (M >= 2) {
    // Step 2: elastic-net prox on the differences.
    st.h = update_h(st.s, st.nu, config_);
    // Step 3: projection onto s = W z.
    Projection p = project_constraint(st.x + st.u, st.h + st.nu, chol_, config_.gamma());
    st.z = std::move(p.z);
    st.s = std::move(p.s);
    // Step 4: dual ascent.
    st.u += st.x - st.z;
    st.nu += st.h - st.s;
  } else {
    st.z = st.x + st.u;
    st.u += st.x - st.z;
  }
  ++st.iteration;

  if (!st.x.allFinite() || !st.z.allFinite() || !st.u.allFinite()) {
    throw DivergenceError(st.iteration, "non-finite primal or dual iterate");
  }
  if (config_.record_residuals) {
    st.residuals.push_back({(st.x - st.z).norm(), (st.z - z_prev).norm()});
  }
}

SolveResult AdmmSolver::solve() const { return solve(initial_state()); }

SolveResult AdmmSolver::solve(SolverState st) const {
  for (int k = 0; k < config_.outer_iters; ++k) {
    iterate(st);
    if (config_.stop_tol > 0.0) {
      const double xn = st.x.norm();
      if (xn > 0.0 && (st.x - st.z).norm() / xn < config_.stop_tol) break;
    }
  }
  SolveResult out;
  out.x.voxels = model_.voxels();
  out.x.substances = model_.substances();
  out.x.values = std::move(st.x);
  out.residuals = std::move(st.residuals);
  out.iterations = st.iteration;
  return out;
}

SolveResult solve(const SignalSet& signals, const SamplingSchedule& schedule,
                  const ForwardModel& model, const SolverConfig& config) {
  return AdmmSolver(model, schedule, signals, config).solve();
}

}  // namespace mrsi

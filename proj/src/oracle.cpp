#include "mrsi/oracle.hpp"

#include <cmath>
#include <deque>

namespace mrsi {
namespace {

struct SmoothEval {
  Eigen::MatrixXd grad;  // of 1/2 sum ||y - Ax||^2 + 1/2 lw2 ||Wx||^2
  double value = 0.0;
};

SmoothEval smooth_part(const Eigen::Ref<const Eigen::MatrixXd>& x, const ForwardModel& model,
                       const SamplingSchedule& schedule, const SignalSet& signals, double lw2) {
  const auto M = x.cols();
  SmoothEval e;
  e.grad = Eigen::MatrixXd::Zero(x.rows(), M);
  for (std::size_t m : schedule.acquired_frames()) {
    const auto c = static_cast<Eigen::Index>(m);
    const Eigen::VectorXcd r = model.apply(x.col(c), schedule.points(m)) - signals.frames[m];
    e.value += 0.5 * r.squaredNorm();
    e.grad.col(c) = model.adjoint(r, schedule.points(m));
  }
  if (M > 1 && lw2 > 0.0) {
    const Eigen::MatrixXd dx = x.rightCols(M - 1) - x.leftCols(M - 1);
    e.value += 0.5 * lw2 * dx.squaredNorm();
    // W^T dx
    e.grad.leftCols(M - 1) -= lw2 * dx;
    e.grad.rightCols(M - 1) += lw2 * dx;
  }
  return e;
}

// (W^T v)_m = v_{m-1} - v_m
Eigen::MatrixXd diff_adjoint(const Eigen::MatrixXd& v, Eigen::Index M) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), M);
  if (M > 1) {
    out.leftCols(M - 1) -= v;
    out.rightCols(M - 1) += v;
  }
  return out;
}

Eigen::MatrixXd diff(const Eigen::MatrixXd& x) {
  const auto M = x.cols();
  return x.rightCols(M - 1) - x.leftCols(M - 1);
}

// Largest eigenvalue of Re(A_m^H A_m) by power iteration.
double frame_lipschitz(const ForwardModel& model, const std::vector<SamplePoint>& points) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.unknowns()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd w = model.adjoint(model.apply(v, points), points);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (std::abs(next - lam) <= 1e-12 * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  return lam;
}

}  // namespace

void OracleConfig::validate() const {
  if (max_iters < 1 || window < 1 || !(tolerance > 0.0) || max_unknowns < 1 ||
      !(dual_step_fraction > 0.0 && dual_step_fraction < 1.0)) {
    throw ParameterError("oracle configuration values must be positive");
  }
}

OracleResult oracle_solve(const SignalSet& signals, const SamplingSchedule& schedule,
                          const ForwardModel& model, const Regularization& lambdas,
                          const OracleConfig& config) {
  config.validate();
  lambdas.validate();
  signals.validate(schedule, model.geometry());
  const auto NJ = static_cast<Eigen::Index>(model.unknowns());
  const auto M = static_cast<Eigen::Index>(schedule.frame_count());
  const auto total = static_cast<std::size_t>(NJ * M);
  if (total > config.max_unknowns) {
    throw ParameterError("oracle refuses " + std::to_string(total) + " unknowns (cap " +
                         std::to_string(config.max_unknowns) + ")");
  }

  double lip = 0.0;
  for (std::size_t m : schedule.acquired_frames()) {
    lip = std::max(lip, frame_lipschitz(model, schedule.points(m)));
  }
  constexpr double kDiffNormSq = 4.0;  // ||W||^2 < 4
  lip = std::max(lip + kDiffNormSq * lambdas.lambda_w2, 1e-12);
  // Condat-Vu step rule: 1/tau - sigma ||W||^2 >= L/2.
  const double tau = 1.0 / lip;
  const double sigma = config.dual_step_fraction * (1.0 / tau - lip / 2.0) / kDiffNormSq;

  std::vector<bool> in_d(static_cast<std::size_t>(M), false);
  for (std::size_t m : schedule.acquired_frames()) in_d[m] = true;

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(NJ, M);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(NJ, std::max<Eigen::Index>(M - 1, 0));
  const double lw1 = lambdas.lambda_w1;

  std::deque<double> history;
  OracleResult out;
  int it = 0;
  for (; it < config.max_iters; ++it) {
    const SmoothEval e = smooth_part(x, model, schedule, signals, lambdas.lambda_w2);
    double f = e.value;
    for (Eigen::Index m = 0; m < M; ++m) {
      if (in_d[static_cast<std::size_t>(m)]) f += lambdas.lambda_x * x.col(m).lpNorm<1>();
    }
    if (M > 1) f += lw1 * diff(x).lpNorm<1>();

    history.push_back(f);
    if (static_cast<int>(history.size()) > config.window + 1) history.pop_front();
    if (static_cast<int>(history.size()) == config.window + 1 &&
        std::abs(history.front() - f) <= config.tolerance * std::max(std::abs(f), 1e-300)) {
      break;
    }

    Eigen::MatrixXd xn = x - tau * (e.grad + diff_adjoint(v, M));
    for (Eigen::Index m = 0; m < M; ++m) {
      if (in_d[static_cast<std::size_t>(m)]) {
        xn.col(m) = soft_threshold(xn.col(m), tau * lambdas.lambda_x);
      }
    }
    if (M > 1) {
      v = (v + sigma * diff(2.0 * xn - x)).cwiseMax(-lw1).cwiseMin(lw1);
    }
    x = std::move(xn);
    if (!x.allFinite()) throw DivergenceError(it, "oracle iterate became non-finite");
  }

  out.x.voxels = model.voxels();
  out.x.substances = model.substances();
  out.x.values = std::move(x);
  out.objective = objective_value(out.x.values, model, schedule, signals, lambdas);
  out.iterations = it;
  return out;
}

KktReport kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& x, const SignalSet& signals,
                       const SamplingSchedule& schedule, const ForwardModel& model,
                       const Regularization& lambdas, double zero_tol) {
  const auto M = static_cast<Eigen::Index>(schedule.frame_count());
  if (x.cols() != M || x.rows() != static_cast<Eigen::Index>(model.unknowns())) {
    throw ShapeError("kkt_residual: x has the wrong shape");
  }
  if (zero_tol < 0.0) zero_tol = 1e-7 * x.cwiseAbs().maxCoeff();

  const SmoothEval e = smooth_part(x, model, schedule, signals, lambdas.lambda_w2);
  KktReport rep;
  {
    double s = 0.0;
    for (std::size_t m : schedule.acquired_frames()) {
      s += model.adjoint(signals.frames[m], schedule.points(m)).squaredNorm();
    }
    rep.gradient_scale = std::sqrt(s);
  }

  std::vector<bool> in_d(static_cast<std::size_t>(M), false);
  for (std::size_t m : schedule.acquired_frames()) in_d[m] = true;
  const double lx = lambdas.lambda_x;
  const double lw1 = lambdas.lambda_w1;

  // Signed distance of w from -(lambda_x * subdifferential of |x|) per entry.
  const auto residual_of = [&](const Eigen::MatrixXd& w) {
    Eigen::MatrixXd r(w.rows(), w.cols());
    for (Eigen::Index m = 0; m < M; ++m) {
      const bool d = in_d[static_cast<std::size_t>(m)];
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double wi = w(i, m);
        if (!d) {
          r(i, m) = wi;
        } else if (std::abs(x(i, m)) > zero_tol) {
          r(i, m) = wi + lx * (x(i, m) > 0 ? 1.0 : -1.0);
        } else {
          r(i, m) = soft_threshold(wi, lx);
        }
      }
    }
    return r;
  };

  if (M == 1) {
    rep.residual = residual_of(e.grad).norm();
    return rep;
  }

  // Choose the free part of v in lambda_w1 * subdifferential of |Wx| to
  // minimize the residual: projected accelerated gradient on
  // 1/2 ||residual_of(grad + W^T v)||^2, whose gradient in v is W r.
  const Eigen::MatrixXd dx = diff(Eigen::MatrixXd(x));
  Eigen::MatrixXd lo(dx.rows(), dx.cols());
  Eigen::MatrixXd hi(dx.rows(), dx.cols());
  for (Eigen::Index k = 0; k < dx.size(); ++k) {
    const double d = dx.data()[k];
    if (std::abs(d) > zero_tol) {
      lo.data()[k] = hi.data()[k] = d > 0 ? lw1 : -lw1;
    } else {
      lo.data()[k] = -lw1;
      hi.data()[k] = lw1;
    }
  }
  const auto project = [&](Eigen::MatrixXd v) { return v.cwiseMax(lo).cwiseMin(hi); };

  Eigen::MatrixXd v = project(Eigen::MatrixXd::Zero(dx.rows(), dx.cols()));
  Eigen::MatrixXd y = v;
  double t = 1.0;
  constexpr double kStep = 0.25;  // 1 / ||W||^2 bound
  double best = residual_of(e.grad + diff_adjoint(v, M)).norm();
  for (int it = 0; it < 20000 && best > 0.0; ++it) {
    const Eigen::MatrixXd r = residual_of(e.grad + diff_adjoint(y, M));
    const Eigen::MatrixXd vn = project(y - kStep * diff(r));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = vn + ((t - 1.0) / tn) * (vn - v);
    v = vn;
    t = tn;
    const double cur = residual_of(e.grad + diff_adjoint(v, M)).norm();
    if (cur < best) {
      if (best - cur <= 1e-15 * std::max(best, 1e-300) && it > 100) {
        best = cur;
        break;
      }
      best = cur;
    }
  }
  rep.residual = best;
  return rep;
}

}  // namespace mrsi

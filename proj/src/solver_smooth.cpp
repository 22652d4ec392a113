#include <algorithm>
#include <cmath>

#include "alo/error.hpp"
#include "alo/linalg.hpp"
#include "alo/solvers.hpp"

namespace alo {

namespace {

struct SmoothProblem {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  LossKind loss;
  double lambda;
};

double loss_sum(const SmoothProblem& pr, const Eigen::VectorXd& u) {
  double s = 0.0;
  for (Index j = 0; j < u.size(); ++j) s += loss_value(pr.loss, u(j), pr.y(j));
  return s;
}

Eigen::VectorXd loss_d(const SmoothProblem& pr, const Eigen::VectorXd& u, int order) {
  Eigen::VectorXd d(u.size());
  for (Index j = 0; j < u.size(); ++j) d(j) = loss_deriv(pr.loss, u(j), pr.y(j), order);
  return d;
}

FitResult finish(const SmoothProblem& pr, RegKind reg, const Eigen::VectorXd& beta, int iterations,
                 bool polished, const SolverOptions& opts) {
  FitResult f;
  f.lambda = pr.lambda;
  f.beta = beta;
  const Eigen::VectorXd u = pr.X * beta;
  f.theta = smooth_dual(pr.loss, u, pr.y);
  const Eigen::VectorXd g = pr.X.transpose() * f.theta;  // = -grad of the loss part
  double kkt = 0.0;
  if (reg == RegKind::ridge) {
    f.objective = loss_sum(pr, u) + 0.5 * pr.lambda * beta.squaredNorm();
    kkt = (pr.lambda * beta - g).cwiseAbs().maxCoeff();
    for (Index j = 0; j < beta.size(); ++j) f.active_set.push_back(j);
  } else {
    f.objective = loss_sum(pr, u) + pr.lambda * beta.lpNorm<1>();
    for (Index j = 0; j < beta.size(); ++j) {
      const double v = beta(j) != 0.0 ? std::abs(g(j) - pr.lambda * (beta(j) > 0 ? 1.0 : -1.0))
                                      : std::max(0.0, std::abs(g(j)) - pr.lambda);
      kkt = std::max(kkt, v);
      if (std::abs(beta(j)) > opts.zero_tol) f.active_set.push_back(j);
    }
  }
  f.kkt_residual = kkt;
  f.iterations = iterations;
  f.polished = polished;
  f.converged = kkt <= opts.kkt_tol * std::max(1.0, pr.lambda);
  return f;
}

FitResult ridge_squared(const SmoothProblem& pr, const SolverOptions& opts) {
  const Index n = pr.X.rows();
  const Index p = pr.X.cols();
  Eigen::VectorXd beta;
  if (p <= n) {
    Eigen::MatrixXd a = pr.X.transpose() * pr.X;
    a.diagonal().array() += pr.lambda;
    beta = linalg::factor_spd(a, "ridge normal equations").solve(Eigen::VectorXd(pr.X.transpose() * pr.y));
  } else {
    Eigen::MatrixXd a = pr.X * pr.X.transpose();
    a.diagonal().array() += pr.lambda;
    beta = pr.X.transpose() * linalg::factor_spd(a, "ridge normal equations").solve(pr.y);
  }
  return finish(pr, RegKind::ridge, beta, 1, true, opts);
}

// Damped Newton on the smooth objective restricted to the columns in `cols`,
// with an optional linear term lambda * s^T b (fixed-sign l1 penalty).
bool newton(const SmoothProblem& pr, const std::vector<Index>& cols, double ridge,
            const Eigen::VectorXd& lin, Eigen::VectorXd& b, int max_iter, int& iterations) {
  const Index a = static_cast<Index>(cols.size());
  const Index n = pr.X.rows();
  Eigen::MatrixXd xa(n, a);
  for (Index k = 0; k < a; ++k) xa.col(k) = pr.X.col(cols[static_cast<std::size_t>(k)]);
  auto obj = [&](const Eigen::VectorXd& v) {
    return loss_sum(pr, xa * v) + 0.5 * ridge * v.squaredNorm() + lin.dot(v);
  };
  double f = obj(b);
  for (int it = 0; it < max_iter; ++it) {
    ++iterations;
    const Eigen::VectorXd u = xa * b;
    const Eigen::VectorXd d1 = loss_d(pr, u, 1);
    const Eigen::VectorXd d2 = loss_d(pr, u, 2);
    const Eigen::VectorXd grad = xa.transpose() * d1 + ridge * b + lin;
    if (grad.cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, pr.lambda)) return true;
    Eigen::MatrixXd h = xa.transpose() * d2.asDiagonal() * xa;
    h.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) return false;
    const double decrement = grad.dot(step);
    double t = 1.0;
    Eigen::VectorXd next = b - step;
    double fn = obj(next);
    while (!(fn <= f - 0.25 * t * decrement) && t > 1e-12) {
      t *= 0.5;
      next = b - t * step;
      fn = obj(next);
    }
    if (t <= 1e-12) return decrement <= 1e-20 * std::max(1.0, std::abs(f));
    b = next;
    f = fn;
    if (decrement <= 1e-24 * std::max(1.0, std::abs(f))) return true;
  }
  return false;
}

// Fixed-support Newton solve for l1: certified only if the signs hold and the
// inactive coordinates satisfy |X_j^T theta| <= lambda.
bool polish_l1(const SmoothProblem& pr, const Eigen::VectorXd& start, Eigen::VectorXd& out,
               int& iterations) {
  const Index p = pr.X.cols();
  std::vector<Index> cols;
  for (Index j = 0; j < p; ++j) {
    if (start(j) != 0.0) cols.push_back(j);
  }
  const Index a = static_cast<Index>(cols.size());
  Eigen::VectorXd b(a);
  Eigen::VectorXd lin(a);
  for (Index k = 0; k < a; ++k) {
    b(k) = start(cols[static_cast<std::size_t>(k)]);
    lin(k) = pr.lambda * (b(k) > 0 ? 1.0 : -1.0);
  }
  if (a > 0 && !newton(pr, cols, 0.0, lin, b, 100, iterations)) return false;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Index k = 0; k < a; ++k) {
    if (!(b(k) * lin(k) > 0.0)) return false;
    beta(cols[static_cast<std::size_t>(k)]) = b(k);
  }
  const Eigen::VectorXd g = pr.X.transpose() * smooth_dual(pr.loss, pr.X * beta, pr.y);
  for (Index j = 0; j < p; ++j) {
    if (beta(j) == 0.0 && std::abs(g(j)) > pr.lambda * (1.0 + 1e-9)) return false;
  }
  out = beta;
  return true;
}

// Proximal Newton: weighted least-squares subproblem by coordinate descent,
// then a backtracking step on the true objective.
FitResult l1_smooth(const SmoothProblem& pr, const SolverOptions& opts, const FitResult* warm) {
  const Index p = pr.X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm != nullptr && warm->beta.size() == p) beta = warm->beta;
  int iterations = 0;
  Eigen::VectorXd pol;
  if (polish_l1(pr, beta, pol, iterations)) return finish(pr, RegKind::l1, pol, iterations, true, opts);

  auto total = [&](const Eigen::VectorXd& b) {
    return loss_sum(pr, pr.X * b) + pr.lambda * b.lpNorm<1>();
  };
  double f = total(beta);
  for (int outer = 0; outer < 500 && iterations < opts.max_iter; ++outer) {
    ++iterations;
    const Eigen::VectorXd u = pr.X * beta;
    const Eigen::VectorXd d1 = loss_d(pr, u, 1);
    const Eigen::VectorXd w = loss_d(pr, u, 2).cwiseMax(1e-10);
    // Quadratic model: sum_j w_j/2 (x_j^T b - z_j)^2 with working response z.
    const Eigen::VectorXd zr = u - d1.cwiseQuotient(w);
    Eigen::VectorXd b = beta;
    Eigen::VectorXd r = zr - u;  // working residual
    Eigen::VectorXd colw(p);
    for (Index j = 0; j < p; ++j) colw(j) = pr.X.col(j).cwiseAbs2().dot(w);
    for (int sweep = 0; sweep < 1000; ++sweep) {
      double change = 0.0;
      for (Index j = 0; j < p; ++j) {
        if (colw(j) == 0.0) continue;
        const double old = b(j);
        const double z = pr.X.col(j).dot(w.cwiseProduct(r)) + colw(j) * old;
        const double next = soft_threshold(z, pr.lambda) / colw(j);
        if (next != old) {
          r.noalias() -= (next - old) * pr.X.col(j);
          b(j) = next;
          change = std::max(change, std::abs(next - old) * std::sqrt(colw(j)));
        }
      }
      if (change <= 1e-12 * std::max(1.0, std::sqrt(colw.sum()))) break;
    }
    const Eigen::VectorXd dir = b - beta;
    const double model_dec = d1.dot(pr.X * dir) + pr.lambda * (b.lpNorm<1>() - beta.lpNorm<1>());
    double t = 1.0;
    Eigen::VectorXd next = b;
    double fn = total(next);
    while (fn > f + 0.25 * t * model_dec && t > 1e-10) {
      t *= 0.5;
      next = beta + t * dir;
      fn = total(next);
    }
    const double dec = f - fn;
    if (fn <= f) {
      beta = next;
      f = fn;
    }
    if (polish_l1(pr, beta, pol, iterations)) {
      return finish(pr, RegKind::l1, pol, iterations, true, opts);
    }
    if (dec <= opts.objective_tol * 1e-3 * std::max(1.0, std::abs(f))) break;
  }
  return finish(pr, RegKind::l1, beta, iterations, false, opts);
}

}  // namespace

FitResult fit_smooth_at(const Dataset& data, LossKind loss, RegKind reg, double lambda,
                        const SolverOptions& opts, const FitResult* warm) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
  if (loss == LossKind::hinge) {
    throw Error(ErrorKind::unsupported, "hinge loss is not smooth; use the SVM solver");
  }
  if (reg != RegKind::ridge && reg != RegKind::l1) {
    throw Error(ErrorKind::unsupported, "smooth solver handles ridge and l1 only");
  }
  SmoothProblem pr{data.X, data.y, loss, lambda};
  if (reg == RegKind::l1) {
    if (loss == LossKind::squared) return fit_lasso_at(data, lambda, opts, warm);
    return l1_smooth(pr, opts, warm);
  }
  if (loss == LossKind::squared) return ridge_squared(pr, opts);
  const Index p = data.p();
  std::vector<Index> cols(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) cols[static_cast<std::size_t>(j)] = j;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm != nullptr && warm->beta.size() == p) beta = warm->beta;
  int iterations = 0;
  const bool ok = newton(pr, cols, lambda, Eigen::VectorXd::Zero(p), beta, 200, iterations);
  FitResult f = finish(pr, RegKind::ridge, beta, iterations, ok, opts);
  return f;
}

PathFit fit_smooth(const Dataset& data, LossKind loss, RegKind reg, std::span<const double> grid,
                   const SolverOptions& opts) {
  check_grid(grid);
  data.validate(requires_binary_labels(loss));
  PathFit path;
  path.lambdas.assign(grid.begin(), grid.end());
  path.fits.reserve(grid.size());
  const FitResult* warm = nullptr;
  for (double lambda : grid) {
    path.fits.push_back(fit_smooth_at(data, loss, reg, lambda, opts, warm));
    warm = &path.fits.back();
  }
  return path;
}

}  // namespace alo

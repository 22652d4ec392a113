#include <algorithm>
#include <cmath>

#include "alo/error.hpp"
#include "alo/rng.hpp"
#include "alo/solvers.hpp"

namespace alo {

namespace {

// alpha_j in [0, 1] scales the hinge subgradient: theta_j = alpha_j y_j and
// beta = X^T theta / lambda.
struct SvmProblem {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  double lambda;
};

double svm_objective(const SvmProblem& pr, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd margin = pr.y.cwiseProduct(pr.X * beta);
  return (1.0 - margin.array()).max(0.0).sum() + 0.5 * pr.lambda * beta.squaredNorm();
}

// Largest violation of the optimality conditions, in margin units.
double svm_kkt(const SvmProblem& pr, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd margin = pr.y.cwiseProduct(pr.X * beta);
  double worst = 0.0;
  for (Index j = 0; j < alpha.size(); ++j) {
    const double g = margin(j) - 1.0;  // dual gradient
    double v = 0.0;
    if (alpha(j) <= 0.0) {
      v = std::max(0.0, -g);
    } else if (alpha(j) >= 1.0) {
      v = std::max(0.0, g);
    } else {
      v = std::abs(g);
    }
    worst = std::max(worst, v);
  }
  const Eigen::VectorXd link = pr.lambda * beta - pr.X.transpose() * alpha.cwiseProduct(pr.y);
  return std::max(worst, link.cwiseAbs().maxCoeff() / std::max(1.0, pr.lambda));
}

// Exact solution given the partition of the observations into the margin set
// V, the violators (alpha = 1) and the rest (alpha = 0).
bool polish(const SvmProblem& pr, const Eigen::VectorXd& margin, double tol,
            Eigen::VectorXd& alpha_out, Eigen::VectorXd& beta_out) {
  const Index n = pr.X.rows();
  std::vector<Index> v;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) {
    if (std::abs(1.0 - margin(j)) < tol) {
      v.push_back(j);
    } else if (margin(j) < 1.0) {
      alpha(j) = 1.0;
    }
  }
  const Index nv = static_cast<Index>(v.size());
  if (nv > pr.X.cols()) return false;
  Eigen::VectorXd base = pr.X.transpose() * alpha.cwiseProduct(pr.y);
  if (nv > 0) {
    Eigen::MatrixXd xv(nv, pr.X.cols());
    Eigen::VectorXd yv(nv);
    for (Index k = 0; k < nv; ++k) {
      xv.row(k) = pr.X.row(v[static_cast<std::size_t>(k)]);
      yv(k) = pr.y(v[static_cast<std::size_t>(k)]);
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nv, nv);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xv);
    Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
    if (piv.minCoeff() <= 1e-7 * piv.maxCoeff()) return false;
    const Eigen::VectorXd ya = llt.solve(Eigen::VectorXd(pr.lambda * yv - xv * base));
    for (Index k = 0; k < nv; ++k) {
      double a = ya(k) * yv(k);
      if (a < -1e-12 || a > 1.0 + 1e-12) return false;
      a = std::clamp(a, 0.0, 1.0);
      alpha(v[static_cast<std::size_t>(k)]) = a;
    }
    base = pr.X.transpose() * alpha.cwiseProduct(pr.y);
  }
  const Eigen::VectorXd beta = base / pr.lambda;
  const Eigen::VectorXd m2 = pr.y.cwiseProduct(pr.X * beta);
  const double slack = 1e-9;
  for (Index j = 0; j < n; ++j) {
    if (alpha(j) == 0.0 && m2(j) < 1.0 - slack) return false;
    if (alpha(j) == 1.0 && m2(j) > 1.0 + slack) return false;
    if (alpha(j) > 0.0 && alpha(j) < 1.0 && std::abs(m2(j) - 1.0) > slack) return false;
  }
  alpha_out = alpha;
  beta_out = beta;
  return true;
}

FitResult finish(const SvmProblem& pr, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                 int iterations, bool polished, const SolverOptions& opts) {
  FitResult f;
  f.lambda = pr.lambda;
  f.beta = beta;
  f.theta = alpha.cwiseProduct(pr.y);
  f.objective = svm_objective(pr, beta);
  f.kkt_residual = svm_kkt(pr, alpha, beta);
  const Eigen::VectorXd margin = pr.y.cwiseProduct(pr.X * beta);
  for (Index j = 0; j < margin.size(); ++j) {
    if (std::abs(1.0 - margin(j)) < opts.margin_tol) f.active_set.push_back(j);
  }
  f.iterations = iterations;
  f.polished = polished;
  f.converged = f.kkt_residual <= opts.kkt_tol;
  return f;
}

}  // namespace

FitResult fit_svm_at(const Dataset& data, double lambda, const SolverOptions& opts,
                     const FitResult* warm) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
  const Index n = data.n();
  SvmProblem pr{data.X, data.y, lambda};
  const Eigen::MatrixXd xt = data.X.transpose();
  const Eigen::VectorXd rowsq = data.X.rowwise().squaredNorm();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  if (warm != nullptr && warm->theta.size() == n) {
    alpha = warm->theta.cwiseProduct(data.y).cwiseMax(0.0).cwiseMin(1.0);
  }
  Eigen::VectorXd beta = xt * alpha.cwiseProduct(data.y) / lambda;
  Eigen::VectorXd a_pol;
  Eigen::VectorXd b_pol;
  if (warm != nullptr) {
    const Eigen::VectorXd margin = data.y.cwiseProduct(data.X * beta);
    if (polish(pr, margin, opts.margin_tol, a_pol, b_pol)) {
      return finish(pr, a_pol, b_pol, 0, true, opts);
    }
  }

  Philox rng(opts.seed, 0x5357u);
  int iter = 0;
  double last_gap = 0.0;
  while (iter < opts.max_iter) {
    ++iter;
    const auto order = random_permutation(static_cast<std::size_t>(n), rng);
    double pg_max = -1e300;
    double pg_min = 1e300;
    for (std::size_t t = 0; t < order.size(); ++t) {
      const Index j = static_cast<Index>(order[t]);
      if (rowsq(j) == 0.0) continue;
      const double g = data.y(j) * xt.col(j).dot(beta) - 1.0;
      double pg = g;
      if (alpha(j) <= 0.0) pg = std::min(g, 0.0);
      if (alpha(j) >= 1.0) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg != 0.0) {
        const double next = std::clamp(alpha(j) - lambda * g / rowsq(j), 0.0, 1.0);
        const double delta = next - alpha(j);
        if (delta != 0.0) {
          beta.noalias() += (delta * data.y(j) / lambda) * xt.col(j);
          alpha(j) = next;
        }
      }
    }
    last_gap = pg_max - pg_min;
    if (iter % 10 == 0 || last_gap < 1e-3) {
      const Eigen::VectorXd margin = data.y.cwiseProduct(data.X * beta);
      if (polish(pr, margin, opts.margin_tol, a_pol, b_pol)) {
        return finish(pr, a_pol, b_pol, iter, true, opts);
      }
    }
    if (last_gap < 1e-12) break;
  }
  // Recompute beta from alpha to remove drift.
  beta = xt * alpha.cwiseProduct(data.y) / lambda;
  return finish(pr, alpha, beta, iter, false, opts);
}

PathFit fit_svm(const Dataset& data, std::span<const double> grid, const SolverOptions& opts) {
  check_grid(grid);
  data.validate(true);
  PathFit path;
  path.lambdas.assign(grid.begin(), grid.end());
  path.fits.reserve(grid.size());
  const FitResult* warm = nullptr;
  for (double lambda : grid) {
    path.fits.push_back(fit_svm_at(data, lambda, opts, warm));
    warm = &path.fits.back();
  }
  return path;
}

}  // namespace alo

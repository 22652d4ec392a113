#include <algorithm>
#include <cmath>

#include "alo/error.hpp"
#include "alo/solvers.hpp"

namespace alo {

namespace {

struct LassoState {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  double lambda;
  Eigen::VectorXd colsq;
};

std::vector<Index> support_of(const Eigen::VectorXd& beta, double tol) {
  std::vector<Index> s;
  for (Index j = 0; j < beta.size(); ++j) {
    if (std::abs(beta(j)) > tol) s.push_back(j);
  }
  return s;
}

// Optimality violation of the l1 problem given the gradient g = X^T r.
double l1_kkt(const Eigen::VectorXd& g, const Eigen::VectorXd& beta, double lambda) {
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double v = beta(j) != 0.0 ? std::abs(g(j) - lambda * (beta(j) > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(g(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

// Solve the stationarity equations on a fixed support with fixed signs and
// accept the result only if it is a certified optimum.
bool polish(const LassoState& st, const std::vector<Index>& support, const Eigen::VectorXd& signs,
            Eigen::VectorXd& beta_out) {
  const Index p = st.X.cols();
  const Index a = static_cast<Index>(support.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (a > st.X.rows()) return false;
  if (a > 0) {
    Eigen::MatrixXd xa(st.X.rows(), a);
    for (Index k = 0; k < a; ++k) xa.col(k) = st.X.col(support[static_cast<std::size_t>(k)]);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(a, a);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xa.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
    if (piv.minCoeff() <= 1e-7 * piv.maxCoeff()) return false;
    const Eigen::VectorXd rhs = xa.transpose() * st.y - st.lambda * signs;
    const Eigen::VectorXd ba = llt.solve(rhs);
    for (Index k = 0; k < a; ++k) {
      if (!(ba(k) * signs(k) > 0.0)) return false;
      beta(support[static_cast<std::size_t>(k)]) = ba(k);
    }
  }
  const Eigen::VectorXd g = st.X.transpose() * (st.y - st.X * beta);
  const double slack = 1e-9 * std::max(1.0, st.lambda);
  for (Index j = 0; j < p; ++j) {
    if (beta(j) == 0.0 && std::abs(g(j)) > st.lambda + slack) return false;
  }
  beta_out = beta;
  return true;
}

Eigen::VectorXd signs_of(const Eigen::VectorXd& v, const std::vector<Index>& support) {
  Eigen::VectorXd s(static_cast<Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) s(static_cast<Index>(k)) = v(support[k]) > 0 ? 1.0 : -1.0;
  return s;
}

double sweep(const LassoState& st, Eigen::VectorXd& beta, Eigen::VectorXd& r,
             const std::vector<Index>& coords) {
  double max_change = 0.0;
  for (Index j : coords) {
    const double cs = st.colsq(j);
    if (cs == 0.0) continue;
    const double old = beta(j);
    const double z = st.X.col(j).dot(r) + cs * old;
    const double next = soft_threshold(z, st.lambda) / cs;
    const double delta = next - old;
    if (delta != 0.0) {
      r.noalias() -= delta * st.X.col(j);
      beta(j) = next;
      max_change = std::max(max_change, std::abs(delta) * std::sqrt(cs));
    }
  }
  return max_change;
}

FitResult finish(const LassoState& st, const Eigen::VectorXd& beta, int iterations, bool polished,
                 const SolverOptions& opts) {
  FitResult f;
  f.lambda = st.lambda;
  f.beta = beta;
  f.theta = st.y - st.X * beta;
  f.objective = 0.5 * f.theta.squaredNorm() + st.lambda * beta.lpNorm<1>();
  f.kkt_residual = l1_kkt(st.X.transpose() * f.theta, beta, st.lambda);
  f.active_set = support_of(beta, opts.zero_tol);
  f.iterations = iterations;
  f.polished = polished;
  f.converged = f.kkt_residual <= opts.kkt_tol * std::max(1.0, st.lambda);
  return f;
}

}  // namespace

FitResult fit_lasso_at(const Dataset& data, double lambda, const SolverOptions& opts,
                       const FitResult* warm) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
  const Index p = data.p();
  LassoState st{data.X, data.y, lambda, data.X.colwise().squaredNorm().transpose()};

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm != nullptr && warm->beta.size() == p) beta = warm->beta;

  // A warm start usually has the right support already; then one linear
  // solve certifies the solution.
  {
    const auto support = support_of(beta, 0.0);
    Eigen::VectorXd polished;
    if (polish(st, support, signs_of(beta, support), polished)) {
      return finish(st, polished, 0, true, opts);
    }
  }

  std::vector<Index> all(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
  Eigen::VectorXd r = data.y - data.X * beta;
  const double scale = std::max(1.0, data.y.norm());
  double prev_obj = 0.5 * r.squaredNorm() + lambda * beta.lpNorm<1>();
  int iter = 0;
  std::vector<Index> last_support;
  while (iter < opts.max_iter) {
    sweep(st, beta, r, all);
    ++iter;
    auto active = support_of(beta, 0.0);
    for (int inner = 0; inner < 1000 && iter < opts.max_iter; ++inner) {
      const double change = sweep(st, beta, r, active);
      ++iter;
      if (change <= 1e-13 * scale) break;
    }
    active = support_of(beta, 0.0);
    if (active == last_support || iter > 50) {
      Eigen::VectorXd polished;
      if (polish(st, active, signs_of(beta, active), polished)) {
        return finish(st, polished, iter, true, opts);
      }
    }
    last_support = active;
    const double obj = 0.5 * r.squaredNorm() + lambda * beta.lpNorm<1>();
    const double kkt = l1_kkt(data.X.transpose() * r, beta, lambda);
    if (kkt <= opts.kkt_tol * std::max(1.0, lambda) &&
        std::abs(prev_obj - obj) <= opts.objective_tol * std::max(1.0, std::abs(obj))) {
      break;
    }
    prev_obj = obj;
  }
  return finish(st, beta, iter, false, opts);
}

PathFit fit_lasso(const Dataset& data, std::span<const double> grid, const SolverOptions& opts) {
  check_grid(grid);
  data.validate();
  PathFit path;
  path.lambdas.assign(grid.begin(), grid.end());
  const FitResult* warm = nullptr;
  path.fits.reserve(grid.size());
  for (double lambda : grid) {
    path.fits.push_back(fit_lasso_at(data, lambda, opts, warm));
    warm = &path.fits.back();
  }
  return path;
}

}  // namespace alo

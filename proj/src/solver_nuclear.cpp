#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "alo/error.hpp"
#include "alo/solvers.hpp"

namespace alo {

namespace {

struct NuclearProblem {
  const MatrixDataset& data;
  double lambda;
  Eigen::MatrixXd gram;  // X^T X over flattened observations
  Eigen::VectorXd xty;
  double step;  // 1 / largest eigenvalue of gram
};

Eigen::VectorXd gradient(const NuclearProblem& pr, const Eigen::VectorXd& b) {
  return pr.gram * b - pr.xty;
}

Eigen::VectorXd prox_step(const NuclearProblem& pr, const Eigen::VectorXd& b) {
  const Eigen::VectorXd v = b - pr.step * gradient(pr, b);
  const Eigen::MatrixXd m = unflatten(v, pr.data.p1, pr.data.p2);
  return flatten(singular_value_threshold(m, pr.step * pr.lambda));
}

double objective(const NuclearProblem& pr, const Eigen::VectorXd& b) {
  return nuclear_objective(pr.data, pr.lambda, unflatten(b, pr.data.p1, pr.data.p2));
}

// Gradient-mapping norm: zero exactly at the optimum.
double kkt_of(const NuclearProblem& pr, const Eigen::VectorXd& b) {
  return (b - prox_step(pr, b)).norm() / pr.step;
}

}  // namespace

FitResult fit_nuclear_at(const MatrixDataset& data, double lambda, const SolverOptions& opts,
                         const FitResult* warm) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
  const Index q = data.p1 * data.p2;
  NuclearProblem pr{data, lambda, Eigen::MatrixXd::Zero(q, q), data.X.transpose() * data.y, 1.0};
  pr.gram.selfadjointView<Eigen::Lower>().rankUpdate(data.X.transpose());
  pr.gram = pr.gram.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pr.gram, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) throw Error(ErrorKind::invalid_argument, "all observations are zero");
  pr.step = 1.0 / lmax;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  if (warm != nullptr && warm->beta.size() == q) b = warm->beta;
  Eigen::VectorXd z = b;
  double t = 1.0;
  const double scale = std::max(1.0, lambda);
  int iter = 0;
  bool converged = false;
  while (iter < opts.max_iter) {
    ++iter;
    const Eigen::VectorXd next = prox_step(pr, z);
    // Gradient restart: drop the momentum once it points uphill. An
    // objective-based test stalls when changes sink below round-off.
    if ((z - next).dot(next - b) > 0.0) {
      t = 1.0;
      z = next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = next + ((t - 1.0) / t_next) * (next - b);
      t = t_next;
    }
    b = next;
    if (iter % 10 == 0 && kkt_of(pr, b) <= opts.kkt_tol * scale) {
      converged = true;
      break;
    }
  }
  const double obj = objective(pr, b);
  FitResult f;
  f.lambda = lambda;
  f.beta = b;
  f.B = unflatten(b, data.p1, data.p2);
  f.theta = data.y - data.X * b;
  f.objective = obj;
  f.kkt_residual = kkt_of(pr, b);
  f.converged = converged || f.kkt_residual <= opts.kkt_tol * scale;
  f.iterations = iter;
  f.spectral = spectral_factorization(f.B, opts.rank_tol);
  for (Index k = 0; k < f.spectral->rank; ++k) f.active_set.push_back(k);
  return f;
}

PathFit fit_nuclear(const MatrixDataset& data, std::span<const double> grid,
                    const SolverOptions& opts) {
  check_grid(grid);
  data.validate();
  PathFit path;
  path.lambdas.assign(grid.begin(), grid.end());
  path.fits.reserve(grid.size());
  const FitResult* warm = nullptr;
  for (double lambda : grid) {
    path.fits.push_back(fit_nuclear_at(data, lambda, opts, warm));
    warm = &path.fits.back();
  }
  return path;
}

}  // namespace alo

#include "alo/solvers.hpp"

#include <cmath>
#include <sstream>

#include "alo/error.hpp"

namespace alo {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::invalid_argument, std::string(what) + " contains non-finite entries");
  }
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Index>& keep) {
  Eigen::MatrixXd out(static_cast<Index>(keep.size()), m.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) out.row(static_cast<Index>(r)) = m.row(keep[r]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<Index>& keep) {
  Eigen::VectorXd out(static_cast<Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) out(static_cast<Index>(r)) = v(keep[r]);
  return out;
}

std::vector<Index> all_but(Index n, Index i) {
  if (i < 0 || i >= n) throw Error(ErrorKind::invalid_argument, "observation index out of range");
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j != i) keep.push_back(j);
  }
  return keep;
}

}  // namespace

void Dataset::validate(bool binary_labels) const {
  if (X.rows() < 2) throw Error(ErrorKind::invalid_argument, "need at least 2 observations");
  if (X.cols() < 1) throw Error(ErrorKind::invalid_argument, "need at least 1 feature");
  if (y.size() != X.rows()) {
    throw Error(ErrorKind::invalid_argument, "X has " + std::to_string(X.rows()) + " rows but y has " +
                                                 std::to_string(y.size()) + " entries");
  }
  check_finite(X, "X");
  check_finite(y, "y");
  if (binary_labels) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) != 1.0 && y(i) != -1.0) {
        throw Error(ErrorKind::invalid_argument,
                    "labels must be -1 or +1 (row " + std::to_string(i) + ")");
      }
    }
  }
}

Dataset Dataset::without(Index i) const { return rows(all_but(n(), i)); }

Dataset Dataset::rows(const std::vector<Index>& keep) const {
  return Dataset{take_rows(X, keep), take_rows(y, keep)};
}

Eigen::MatrixXd MatrixDataset::observation(Index j) const {
  return unflatten(X.row(j).transpose(), p1, p2);
}

void MatrixDataset::validate() const {
  if (p1 < 1 || p2 < 1) throw Error(ErrorKind::invalid_argument, "matrix shape must be positive");
  if (X.cols() != p1 * p2) {
    throw Error(ErrorKind::invalid_argument, "flattened observations have " +
                                                 std::to_string(X.cols()) + " columns, expected " +
                                                 std::to_string(p1 * p2));
  }
  if (X.rows() < 2) throw Error(ErrorKind::invalid_argument, "need at least 2 observations");
  if (y.size() != X.rows()) throw Error(ErrorKind::invalid_argument, "X and y disagree in length");
  check_finite(X, "X");
  check_finite(y, "y");
}

MatrixDataset MatrixDataset::without(Index i) const { return rows(all_but(n(), i)); }

MatrixDataset MatrixDataset::rows(const std::vector<Index>& keep) const {
  return MatrixDataset{take_rows(X, keep), take_rows(y, keep), p1, p2};
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Index k = 0; k < m.rows(); ++k) {
    for (Index l = 0; l < m.cols(); ++l) v(k * m.cols() + l) = m(k, l);
  }
  return v;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Index p1, Index p2) {
  if (v.size() != p1 * p2) throw Error(ErrorKind::invalid_argument, "unflatten: size mismatch");
  Eigen::MatrixXd m(p1, p2);
  for (Index k = 0; k < p1; ++k) {
    for (Index l = 0; l < p2; ++l) m(k, l) = v(k * p2 + l);
  }
  return m;
}

Eigen::MatrixXd SpectralFactorization::reconstruct() const {
  const Index q = sigma.size();
  return U.leftCols(q) * sigma.asDiagonal() * V.leftCols(q).transpose();
}

SpectralFactorization spectral_factorization(const Eigen::MatrixXd& b, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SpectralFactorization f;
  f.U = svd.matrixU();
  f.V = svd.matrixV();
  f.sigma = svd.singularValues();
  const double smax = f.sigma.size() > 0 ? f.sigma(0) : 0.0;
  f.rank = 0;
  if (smax > 0.0) {
    for (Index t = 0; t < f.sigma.size(); ++t) {
      if (f.sigma(t) > rel_tol * smax) ++f.rank;
    }
  }
  return f;
}

bool PathFit::all_converged() const {
  for (const auto& f : fits) {
    if (!f.converged) return false;
  }
  return true;
}

std::vector<double> log_grid(double lambda_max, double lambda_min, int count) {
  if (!(lambda_max > 0.0) || !(lambda_min > 0.0) || count < 1) {
    throw Error(ErrorKind::invalid_argument, "lambda grid needs positive bounds and count >= 1");
  }
  if (count > 1 && !(lambda_max > lambda_min)) {
    throw Error(ErrorKind::invalid_argument, "lambda grid needs lambda_max > lambda_min");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double a = std::log(lambda_max);
  const double b = std::log(lambda_min);
  for (int k = 0; k < count; ++k) {
    grid[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (count - 1));
  }
  grid.front() = lambda_max;
  grid.back() = lambda_min;
  return grid;
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::invalid_argument, "empty lambda grid");
  for (double v : grid) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::invalid_argument, "lambda values must be positive and finite");
    }
  }
  if (grid.size() < 2) return;
  const bool down = grid[1] < grid[0];
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (down ? !(grid[k] < grid[k - 1]) : !(grid[k] > grid[k - 1])) {
      throw Error(ErrorKind::invalid_argument, "lambda grid must be strictly monotone");
    }
  }
}

Eigen::MatrixXd fused_difference_matrix(Index p) {
  if (p < 2) throw Error(ErrorKind::invalid_argument, "fused difference matrix needs p >= 2");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(p - 1, p);
  for (Index i = 0; i + 1 < p; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -1.0;
  }
  return d;
}

Eigen::VectorXd smooth_dual(LossKind loss, const Eigen::VectorXd& fitted, const Eigen::VectorXd& y) {
  Eigen::VectorXd theta(fitted.size());
  for (Index j = 0; j < fitted.size(); ++j) theta(j) = -loss_deriv(loss, fitted(j), y(j), 1);
  return theta;
}

RegularizerSpec ModelSpec::regularizer(double lambda) const {
  switch (reg) {
    case RegKind::l1: return RegularizerSpec::l1(lambda);
    case RegKind::ridge: return RegularizerSpec::ridge(lambda);
    case RegKind::generalized_l1: return RegularizerSpec::generalized_l1(D, lambda);
    case RegKind::nuclear: return RegularizerSpec::nuclear(lambda);
  }
  throw Error(ErrorKind::invalid_argument, "unknown regularizer");
}

std::string ModelSpec::name() const {
  std::ostringstream os;
  os << to_string(loss) << '+' << to_string(reg);
  return os.str();
}

void ModelSpec::validate() const {
  check_grid(lambdas);
  const bool ok = (loss == LossKind::squared) ||
                  (loss == LossKind::logistic && (reg == RegKind::l1 || reg == RegKind::ridge)) ||
                  (loss == LossKind::hinge && reg == RegKind::ridge);
  if (!ok) throw Error(ErrorKind::unsupported, "no solver for model " + name());
  if (reg == RegKind::generalized_l1 && D.size() == 0) {
    throw Error(ErrorKind::invalid_argument, "generalized-l1 model needs a D matrix");
  }
}

FitResult fit_at(const ModelSpec& model, const Dataset& data, double lambda, const FitResult* warm) {
  switch (model.reg) {
    case RegKind::l1:
      if (model.loss == LossKind::squared) return fit_lasso_at(data, lambda, model.solver, warm);
      if (model.loss == LossKind::logistic) {
        return fit_smooth_at(data, model.loss, model.reg, lambda, model.solver, warm);
      }
      break;
    case RegKind::ridge:
      if (model.loss == LossKind::hinge) return fit_svm_at(data, lambda, model.solver, warm);
      return fit_smooth_at(data, model.loss, model.reg, lambda, model.solver, warm);
    case RegKind::generalized_l1:
      if (model.loss == LossKind::squared) {
        return fit_genlasso_at(data, model.D, lambda, model.solver, warm);
      }
      break;
    case RegKind::nuclear:
      throw Error(ErrorKind::invalid_argument, "nuclear-norm models need matrix data");
  }
  throw Error(ErrorKind::unsupported, "no solver for model " + model.name());
}

PathFit fit_path(const ModelSpec& model, const Dataset& data) {
  model.validate();
  data.validate(requires_binary_labels(model.loss));
  PathFit path;
  path.lambdas = model.lambdas;
  path.fits.reserve(model.lambdas.size());
  const FitResult* warm = nullptr;
  for (double lambda : model.lambdas) {
    path.fits.push_back(fit_at(model, data, lambda, warm));
    warm = &path.fits.back();
  }
  return path;
}

FitResult fit_at(const ModelSpec& model, const MatrixDataset& data, double lambda,
                 const FitResult* warm) {
  if (model.reg != RegKind::nuclear || model.loss != LossKind::squared) {
    throw Error(ErrorKind::unsupported, "matrix data supports only squared+nuclear");
  }
  return fit_nuclear_at(data, lambda, model.solver, warm);
}

PathFit fit_path(const ModelSpec& model, const MatrixDataset& data) {
  check_grid(model.lambdas);
  data.validate();
  PathFit path;
  path.lambdas = model.lambdas;
  path.fits.reserve(model.lambdas.size());
  const FitResult* warm = nullptr;
  for (double lambda : model.lambdas) {
    path.fits.push_back(fit_at(model, data, lambda, warm));
    warm = &path.fits.back();
  }
  return path;
}

double model_objective(const ModelSpec& model, const Dataset& data, double lambda,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd u = data.X * beta;
  double total = 0.0;
  for (Index j = 0; j < u.size(); ++j) total += loss_value(model.loss, u(j), data.y(j));
  return total + reg_value(model.regularizer(lambda), beta);
}

double nuclear_objective(const MatrixDataset& data, double lambda, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd r = data.y - data.X * flatten(b);
  return 0.5 * r.squaredNorm() + lambda * nuclear_norm(b);
}

}  // namespace alo

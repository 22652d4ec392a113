#include "alo/oracle.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "alo/error.hpp"
#include "alo/parallel.hpp"
#include "alo/rng.hpp"

namespace alo {

namespace {

FitResult drop_observation(const FitResult& f, Index i) {
  FitResult w = f;
  if (w.theta.size() > i) {
    const Index n = w.theta.size();
    Eigen::VectorXd t(n - 1);
    t.head(i) = f.theta.head(i);
    t.tail(n - 1 - i) = f.theta.tail(n - 1 - i);
    w.theta = t;
  }
  return w;
}

double predict(const Dataset& data, Index i, const FitResult& fit) {
  return data.X.row(i).dot(fit.beta);
}

double predict(const MatrixDataset& data, Index i, const FitResult& fit) {
  return data.X.row(i).dot(fit.beta);
}

void prepare(const ModelSpec& model, const Dataset& data) {
  model.validate();
  data.validate(requires_binary_labels(model.loss));
}

void prepare(const ModelSpec& model, const MatrixDataset& data) {
  check_grid(model.lambdas);
  data.validate();
}

template <class Data>
OracleCurve loocv_impl(const ModelSpec& model, const Data& data, const OracleOptions& opts,
                       const PathFit* full) {
  prepare(model, data);
  const std::size_t n = static_cast<std::size_t>(data.n());
  const std::size_t g = model.lambdas.size();
  if (n * g > opts.max_refits) {
    throw Error(ErrorKind::budget_exceeded, "exact LOOCV needs " + std::to_string(n * g) +
                                                " refits, budget is " + std::to_string(opts.max_refits));
  }
  PathFit own;
  if (full == nullptr) {
    own = fit_path(model, data);
    full = &own;
  }
  if (full->fits.size() != g) throw Error(ErrorKind::invalid_argument, "path does not match grid");

  OracleCurve c;
  c.lambdas = model.lambdas;
  c.error_fn = opts.error_fn;
  c.predictions.assign(g, Predictions(n));
  std::vector<double> secs(n * g, 0.0);
  parallel_for(n * g, opts.threads, [&](std::size_t job) {
    const std::size_t k = job / n;
    const Index i = static_cast<Index>(job % n);
    const auto start = std::chrono::steady_clock::now();
    const Data reduced = data.without(i);
    const FitResult warm = drop_observation(full->fits[k], i);
    ObsPrediction& o = c.predictions[k][static_cast<std::size_t>(i)];
    o.index = i;
    try {
      const FitResult refit = fit_at(model, reduced, model.lambdas[k], &warm);
      o.y_loo = predict(data, i, refit);
      if (!refit.converged) {
        o.degenerate = true;
        o.reason = "refit did not converge";
      }
    } catch (const Error& e) {
      o.degenerate = true;
      o.reason = e.what();
      o.y_loo = std::numeric_limits<double>::quiet_NaN();
    }
    secs[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  c.loocv_risk.resize(g);
  c.n_failed.resize(g);
  c.seconds.assign(g, 0.0);
  for (std::size_t k = 0; k < g; ++k) {
    c.loocv_risk[k] = average_risk(c.predictions[k], data.y, opts.error_fn, &c.n_failed[k]);
    for (std::size_t i = 0; i < n; ++i) c.seconds[k] += secs[k * n + i];
  }
  return c;
}

}  // namespace

OracleCurve exact_loocv(const ModelSpec& model, const Dataset& data, const OracleOptions& opts,
                        const PathFit* full) {
  return loocv_impl(model, data, opts, full);
}

OracleCurve exact_loocv(const ModelSpec& model, const MatrixDataset& data,
                        const OracleOptions& opts, const PathFit* full) {
  return loocv_impl(model, data, opts, full);
}

std::vector<int> kfold_assignment(Index n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) throw Error(ErrorKind::invalid_argument, "k-fold needs 2 <= k <= n");
  Philox rng(seed, 0x6b666f6cu);
  const auto perm = random_permutation(static_cast<std::size_t>(n), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return fold;
}

std::vector<double> kfold_cv(const ModelSpec& model, const Dataset& data, int k, std::uint64_t seed,
                             ErrorFn fn, int threads) {
  prepare(model, data);
  const Index n = data.n();
  const auto fold = kfold_assignment(n, k, seed);
  const std::size_t g = model.lambdas.size();
  // err[f][lambda] summed over the held-out observations of fold f.
  std::vector<std::vector<double>> err(static_cast<std::size_t>(k), std::vector<double>(g, 0.0));
  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < n; ++i) {
      (fold[static_cast<std::size_t>(i)] == static_cast<int>(f) ? test : train).push_back(i);
    }
    const PathFit path = fit_path(model, data.rows(train));
    for (std::size_t l = 0; l < g; ++l) {
      for (Index i : test) {
        err[f][l] += pointwise_error(fn, data.y(i), data.X.row(i).dot(path.fits[l].beta));
      }
    }
  });
  std::vector<double> risk(g, 0.0);
  for (std::size_t l = 0; l < g; ++l) {
    for (int f = 0; f < k; ++f) risk[l] += err[static_cast<std::size_t>(f)][l];
    risk[l] /= static_cast<double>(n);
  }
  return risk;
}

namespace {

struct SmoothedTerms {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

// Objective, gradient and Hessian of the smoothed problem.
SmoothedTerms smoothed_terms(const ModelSpec& model, const Dataset& data, double lambda,
                             const SmoothingKernel& kernel, const Eigen::VectorXd& beta,
                             bool want_hess) {
  const Index n = data.n();
  const Index p = data.p();
  const Eigen::VectorXd u = data.X * beta;
  SmoothedTerms t;
  Eigen::VectorXd d1(n);
  Eigen::VectorXd d2(n);
  Eigen::VectorXd r1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r2 = Eigen::VectorXd::Zero(p);
  if (model.loss == LossKind::hinge) {
    for (Index j = 0; j < n; ++j) {
      const SmoothedValue s = smooth_scalar(hinge_function(data.y(j)), kernel, u(j));
      t.value += s.value;
      d1(j) = s.d1;
      d2(j) = s.d2;
    }
    t.value += 0.5 * lambda * beta.squaredNorm();
    r1 = lambda * beta;
    r2.setConstant(lambda);
  } else {
    const ScalarFunction a = abs_function();
    d1 = u - data.y;
    d2.setOnes();
    t.value = 0.5 * d1.squaredNorm();
    for (Index l = 0; l < p; ++l) {
      const SmoothedValue s = smooth_scalar(a, kernel, beta(l));
      t.value += lambda * s.value;
      r1(l) = lambda * s.d1;
      r2(l) = lambda * s.d2;
    }
  }
  t.grad = data.X.transpose() * d1 + r1;
  if (want_hess) {
    t.hess = data.X.transpose() * d2.asDiagonal() * data.X;
    t.hess.diagonal() += r2;
  }
  return t;
}

void check_smoothable(const ModelSpec& model) {
  const bool ok = (model.loss == LossKind::hinge && model.reg == RegKind::ridge) ||
                  (model.loss == LossKind::squared && model.reg == RegKind::l1);
  if (!ok) {
    throw Error(ErrorKind::unsupported, "smoothing covers hinge+ridge and squared+l1, not " +
                                            model.name());
  }
}

}  // namespace

FitResult fit_smoothed(const ModelSpec& model, const Dataset& data, double lambda,
                       const SmoothingKernel& kernel, const FitResult* start) {
  check_smoothable(model);
  if (!(kernel.bandwidth > 0.0)) throw Error(ErrorKind::invalid_argument, "bandwidth must be positive");
  const Index p = data.p();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (start != nullptr && start->beta.size() == p) beta = start->beta;
  SmoothedTerms t = smoothed_terms(model, data, lambda, kernel, beta, true);
  const double scale = std::max(1.0, lambda);
  int iter = 0;
  bool done = false;
  double cond = 0.0;
  for (; iter < 500; ++iter) {
    if (t.grad.cwiseAbs().maxCoeff() <= 1e-10 * scale) {
      done = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(t.hess);
    const Eigen::VectorXd dd = ldlt.vectorD().cwiseAbs();
    cond = dd.maxCoeff() / std::max(dd.minCoeff(), 1e-300);
    const Eigen::VectorXd step = ldlt.solve(t.grad);
    const double dec = t.grad.dot(step);
    if (!(dec > 0.0) || !step.allFinite()) break;
    double a = 1.0;
    Eigen::VectorXd next = beta - step;
    double fv = smoothed_terms(model, data, lambda, kernel, next, false).value;
    while (fv > t.value - 0.25 * a * dec && a > 1e-14) {
      a *= 0.5;
      next = beta - a * step;
      fv = smoothed_terms(model, data, lambda, kernel, next, false).value;
    }
    if (a <= 1e-14) {
      done = dec <= 1e-22 * std::max(1.0, std::abs(t.value));
      break;
    }
    beta = next;
    t = smoothed_terms(model, data, lambda, kernel, beta, true);
  }
  if (!done) {
    throw Error(ErrorKind::not_converged,
                "smoothed fit stalled (Hessian condition estimate " + std::to_string(cond) + ")");
  }
  FitResult f;
  f.lambda = lambda;
  f.beta = beta;
  f.objective = t.value;
  f.kkt_residual = t.grad.cwiseAbs().maxCoeff();
  f.converged = true;
  f.iterations = iter;
  const Eigen::VectorXd u = data.X * beta;
  f.theta.resize(data.n());
  for (Index j = 0; j < data.n(); ++j) {
    f.theta(j) = model.loss == LossKind::hinge
                     ? -smooth_scalar(hinge_function(data.y(j)), kernel, u(j)).d1
                     : data.y(j) - u(j);
  }
  return f;
}

Predictions alo_smoothed(const ModelSpec& model, const Dataset& data, const FitResult& fit,
                         const SmoothingKernel& kernel) {
  check_smoothable(model);
  const Index n = data.n();
  const Index p = data.p();
  const Eigen::VectorXd u = data.X * fit.beta;
  Eigen::VectorXd d1(n);
  Eigen::VectorXd d2(n);
  Eigen::VectorXd rh(p);
  if (model.loss == LossKind::hinge) {
    for (Index j = 0; j < n; ++j) {
      const SmoothedValue s = smooth_scalar(hinge_function(data.y(j)), kernel, u(j));
      d1(j) = s.d1;
      d2(j) = s.d2;
    }
    rh.setConstant(fit.lambda);
  } else {
    d1 = u - data.y;
    d2.setOnes();
    const ScalarFunction a = abs_function();
    for (Index l = 0; l < p; ++l) rh(l) = fit.lambda * smooth_scalar(a, kernel, fit.beta(l)).d2;
  }
  const Eigen::VectorXd h = hat_diagonal(data.X, d2, rh, "smoothed ALO inner matrix");
  return newton_step(u, h, d1, d2);
}

namespace fd {

namespace {
void check_step(double x, double h) {
  if (!(h > 0.0) || x + h == x) throw Error(ErrorKind::invalid_argument, "finite-difference step underflows");
}
}  // namespace

double derivative(const std::function<double(double)>& f, double x, double h, bool richardson) {
  check_step(x, h);
  const double d_h = (f(x + h) - f(x - h)) / (2.0 * h);
  if (!richardson) return d_h;
  const double h2 = 0.5 * h;
  check_step(x, h2);
  const double d_h2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
  return (4.0 * d_h2 - d_h) / 3.0;
}

double second_derivative(const std::function<double(double)>& f, double x, double h) {
  check_step(x, h);
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd j(f0.size(), x.size());
  for (Index k = 0; k < x.size(); ++k) {
    check_step(x(k), h);
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (f(xp) - f(xm)) / (xp(k) - xm(k));
  }
  return j;
}

Eigen::MatrixXd hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x, double h) {
  const Index p = x.size();
  Eigen::MatrixXd hs(p, p);
  for (Index a = 0; a < p; ++a) {
    check_step(x(a), h);
    for (Index b = a; b < p; ++b) {
      auto at = [&](double sa, double sb) {
        Eigen::VectorXd z = x;
        z(a) += sa * h;
        z(b) += sb * h;
        return f(z);
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
      hs(a, b) = v;
      hs(b, a) = v;
    }
  }
  return hs;
}

}  // namespace fd

}  // namespace alo

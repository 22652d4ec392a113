#include "alo/risk.hpp"

#include <cmath>
#include <limits>

#include "alo/alo_dual.hpp"
#include "alo/error.hpp"
#include "alo/parallel.hpp"

namespace alo {

ErrorFn parse_error_fn(std::string_view name) {
  if (name == "squared") return ErrorFn::squared;
  if (name == "zero-one" || name == "zero_one" || name == "01") return ErrorFn::zero_one;
  throw Error(ErrorKind::invalid_argument, "unknown error function '" + std::string(name) + "'");
}

std::string_view to_string(ErrorFn fn) {
  return fn == ErrorFn::squared ? "squared" : "zero-one";
}

double pointwise_error(ErrorFn fn, double y, double yhat) {
  if (fn == ErrorFn::squared) return (y - yhat) * (y - yhat);
  const double label = yhat >= 0.0 ? 1.0 : -1.0;
  return label == y ? 0.0 : 1.0;
}

Route parse_route(std::string_view name) {
  if (name == "primal") return Route::primal;
  if (name == "dual") return Route::dual;
  throw Error(ErrorKind::invalid_argument, "unknown route '" + std::string(name) + "'");
}

std::string_view to_string(Route route) { return route == Route::primal ? "primal" : "dual"; }

ErrorFn default_error_fn(LossKind loss) {
  return requires_binary_labels(loss) ? ErrorFn::zero_one : ErrorFn::squared;
}

bool RiskCurve::ok() const {
  for (const auto& f : failures) {
    if (!f.empty()) return false;
  }
  return true;
}

double average_risk(const Predictions& preds, const Eigen::VectorXd& y, ErrorFn fn,
                    Index* n_degenerate, const std::vector<char>* exclude) {
  double total = 0.0;
  Index used = 0;
  Index degenerate = 0;
  for (const auto& o : preds) {
    if (o.degenerate) {
      ++degenerate;
      continue;
    }
    if (exclude != nullptr && (*exclude)[static_cast<std::size_t>(o.index)]) continue;
    total += pointwise_error(fn, y(o.index), o.y_loo);
    ++used;
  }
  if (n_degenerate != nullptr) *n_degenerate = degenerate;
  return used > 0 ? total / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
}

bool route_available(const ModelSpec& model, Route route) {
  switch (model.reg) {
    case RegKind::l1:
    case RegKind::ridge:
      return model.loss != LossKind::hinge || (model.reg == RegKind::ridge && route == Route::primal);
    case RegKind::generalized_l1: return model.loss == LossKind::squared && route == Route::dual;
    case RegKind::nuclear: return model.loss == LossKind::squared && route == Route::primal;
  }
  return false;
}

Predictions alo_predictions(const ModelSpec& model, const Dataset& data, const FitResult& fit,
                            Route route) {
  if (!route_available(model, route)) {
    throw Error(ErrorKind::unsupported, "no " + std::string(to_string(route)) + " ALO route for " +
                                            model.name());
  }
  const RegularizerSpec reg = model.regularizer(fit.lambda);
  const double zero_tol = model.solver.zero_tol;
  if (model.loss == LossKind::hinge) {
    return alo_svm(fit, data, fit.lambda, model.solver.margin_tol);
  }
  if (model.reg == RegKind::generalized_l1) {
    return alo_dual_genlasso(fit, data, model.D, fit.lambda, zero_tol);
  }
  if (route == Route::primal) {
    if (model.reg == RegKind::l1) return alo_nonsmooth_reg(fit, data, model.loss, reg, zero_tol);
    return alo_smooth(fit, data, model.loss, reg);
  }
  if (model.loss == LossKind::squared && model.reg == RegKind::l1) {
    return alo_dual_lasso(fit, data, fit.lambda, zero_tol);
  }
  return alo_dual_general(fit, data, model.loss, reg, nullptr, zero_tol);
}

Predictions alo_predictions(const ModelSpec& model, const MatrixDataset& data,
                            const FitResult& fit, Route route) {
  if (!route_available(model, route)) {
    throw Error(ErrorKind::unsupported, "no " + std::string(to_string(route)) + " ALO route for " +
                                            model.name());
  }
  return alo_nuclear(fit, data, fit.lambda, model.solver.rank_tol);
}

namespace {

template <class Data>
RiskCurve curve_impl(const ModelSpec& model, const Data& data, const PathFit& path, Route route,
                     ErrorFn fn, int threads) {
  if (!route_available(model, route)) {
    throw Error(ErrorKind::unsupported, "no " + std::string(to_string(route)) + " ALO route for " +
                                            model.name());
  }
  const std::size_t count = path.fits.size();
  RiskCurve c;
  c.lambdas = path.lambdas;
  c.error_fn = fn;
  c.route = route;
  c.alo_risk.assign(count, std::numeric_limits<double>::quiet_NaN());
  c.n_degenerate.assign(count, 0);
  c.predictions.assign(count, {});
  c.failures.assign(count, {});
  parallel_for(count, threads, [&](std::size_t k) {
    try {
      c.predictions[k] = alo_predictions(model, data, path.fits[k], route);
      c.alo_risk[k] = average_risk(c.predictions[k], data.y, fn, &c.n_degenerate[k]);
    } catch (const Error& e) {
      c.failures[k] = e.what();
    }
  });
  return c;
}

}  // namespace

RiskCurve alo_curve(const ModelSpec& model, const Dataset& data, const PathFit& path, Route route,
                    ErrorFn fn, int threads) {
  return curve_impl(model, data, path, route, fn, threads);
}

RiskCurve alo_curve(const ModelSpec& model, const MatrixDataset& data, const PathFit& path,
                    Route route, ErrorFn fn, int threads) {
  return curve_impl(model, data, path, route, fn, threads);
}

}  // namespace alo

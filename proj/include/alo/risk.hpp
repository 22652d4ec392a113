#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "alo/alo_primal.hpp"
#include "alo/solvers.hpp"

namespace alo {

/// d(y, yhat): squared error, or zero-one error on the sign of yhat.
enum class ErrorFn { squared, zero_one };

ErrorFn parse_error_fn(std::string_view name);
std::string_view to_string(ErrorFn fn);
double pointwise_error(ErrorFn fn, double y, double yhat);

enum class Route { primal, dual };

Route parse_route(std::string_view name);
std::string_view to_string(Route route);

struct RiskCurve {
  std::vector<double> lambdas;
  std::vector<double> alo_risk;               // NaN where the lambda failed
  std::vector<Index> n_degenerate;
  std::vector<Predictions> predictions;       // per lambda, per observation
  std::vector<std::string> failures;          // empty string when the lambda succeeded
  ErrorFn error_fn = ErrorFn::squared;
  Route route = Route::primal;

  bool ok() const;
};

/// Mean error over non-degenerate observations (NaN if none). Observations
/// listed in `exclude` are skipped as well.
double average_risk(const Predictions& preds, const Eigen::VectorXd& y, ErrorFn fn,
                    Index* n_degenerate = nullptr, const std::vector<char>* exclude = nullptr);

/// Dispatches to the formula matching the model and route. Throws
/// Error{unsupported} for combinations without that route.
Predictions alo_predictions(const ModelSpec& model, const Dataset& data, const FitResult& fit,
                            Route route);
Predictions alo_predictions(const ModelSpec& model, const MatrixDataset& data,
                            const FitResult& fit, Route route);

/// True if the model has an implementation of the route.
bool route_available(const ModelSpec& model, Route route);

/// Per-lambda ALO risk for an already fitted path; lambdas are processed in
/// parallel and merged in grid order.
RiskCurve alo_curve(const ModelSpec& model, const Dataset& data, const PathFit& path, Route route,
                    ErrorFn fn, int threads = 1);
RiskCurve alo_curve(const ModelSpec& model, const MatrixDataset& data, const PathFit& path,
                    Route route, ErrorFn fn, int threads = 1);

/// Default error function: zero-one for classification losses, squared otherwise.
ErrorFn default_error_fn(LossKind loss);

}  // namespace alo

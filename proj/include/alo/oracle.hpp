#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "alo/alo_primal.hpp"
#include "alo/risk.hpp"
#include "alo/smoothing.hpp"
#include "alo/solvers.hpp"

namespace alo {

struct OracleOptions {
  ErrorFn error_fn = ErrorFn::squared;
  int threads = 1;
  std::size_t max_refits = 2000000;  // n * |grid| above this is refused
};

/// Exact leave-one-out predictions and risk by refitting.
struct OracleCurve {
  std::vector<double> lambdas;
  std::vector<double> loocv_risk;
  std::vector<Predictions> predictions;  // degenerate = refit did not converge
  std::vector<double> seconds;           // summed refit time per lambda
  std::vector<Index> n_failed;
  ErrorFn error_fn = ErrorFn::squared;
};

/// Refits start from the full-data fit at the same lambda. `full` may be
/// passed to reuse an existing path.
OracleCurve exact_loocv(const ModelSpec& model, const Dataset& data, const OracleOptions& opts = {},
                        const PathFit* full = nullptr);
OracleCurve exact_loocv(const ModelSpec& model, const MatrixDataset& data,
                        const OracleOptions& opts = {}, const PathFit* full = nullptr);

/// Plain k-fold CV risk per lambda with seeded folds.
std::vector<double> kfold_cv(const ModelSpec& model, const Dataset& data, int k, std::uint64_t seed,
                             ErrorFn fn, int threads = 1);

/// Fold label of every observation (0..k-1) for the given seed.
std::vector<int> kfold_assignment(Index n, int k, std::uint64_t seed);

/// Fit of the kernel-smoothed problem: the hinge loss (hinge + ridge models)
/// or the absolute value in the l1 penalty (squared + l1 models) is replaced
/// by its convolution with the kernel. Newton's method from `start`.
FitResult fit_smoothed(const ModelSpec& model, const Dataset& data, double lambda,
                       const SmoothingKernel& kernel, const FitResult* start = nullptr);

/// Smooth-case ALO formula applied to the smoothed problem.
Predictions alo_smoothed(const ModelSpec& model, const Dataset& data, const FitResult& fit,
                         const SmoothingKernel& kernel);

namespace fd {

/// Central difference; with `richardson` the step-halved estimate is combined
/// to cancel the h^2 term. Throws Error{invalid_argument} if x + h == x.
double derivative(const std::function<double(double)>& f, double x, double h = 1e-5,
                  bool richardson = false);
double second_derivative(const std::function<double(double)>& f, double x, double h = 1e-4);
Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x, double h = 1e-6);
Eigen::MatrixXd hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x, double h = 1e-4);

}  // namespace fd

}  // namespace alo

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alo/model_core.hpp"

namespace alo {

using Eigen::Index;

/// Vector-design regression data; row i of X is x_i^T.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  /// Throws Error{invalid_argument} unless n >= 2, shapes agree, entries are
  /// finite and (when requested) labels are in {-1, +1}.
  void validate(bool binary_labels = false) const;
  Dataset without(Index i) const;
  Dataset rows(const std::vector<Index>& keep) const;
};

/// Matrix-sensing data. Observation X_j (p1 x p2) is stored flattened in row
/// j of X, row-major: X(j, k * p2 + l) = X_j(k, l).
struct MatrixDataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Index p1 = 0;
  Index p2 = 0;

  Index n() const { return X.rows(); }
  Eigen::MatrixXd observation(Index j) const;
  void validate() const;
  MatrixDataset without(Index i) const;
  MatrixDataset rows(const std::vector<Index>& keep) const;
};

/// Row-major flattening matching MatrixDataset.
Eigen::VectorXd flatten(const Eigen::MatrixXd& m);
Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Index p1, Index p2);

struct SolverOptions {
  double objective_tol = 1e-9;  // relative objective change
  double kkt_tol = 1e-7;        // optimality residual
  int max_iter = 200000;
  double zero_tol = 1e-8;    // lasso zeros, fused neighbours, genlasso boundary
  double margin_tol = 1e-5;  // SVM support vectors: |1 - y x^T b| < margin_tol
  double rank_tol = 1e-3;    // nuclear: sigma <= rank_tol * sigma_max counts as zero
  std::uint64_t seed = 0;    // coordinate order of the SVM dual solver
};

/// Full SVD of a p1 x p2 matrix with sigma descending and the rank counted
/// above rel_tol * sigma_max.
struct SpectralFactorization {
  Eigen::MatrixXd U;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd V;
  Index rank = 0;

  Eigen::MatrixXd reconstruct() const;
};

SpectralFactorization spectral_factorization(const Eigen::MatrixXd& b, double rel_tol);

struct FitResult {
  double lambda = 0.0;
  Eigen::VectorXd beta;   // coefficients (row-major vec(B) for matrix sensing)
  Eigen::MatrixXd B;      // matrix sensing only
  Eigen::VectorXd theta;  // dual vector, -theta_j in the loss subdifferential
  Eigen::VectorXd u;      // generalized lasso: X^T theta = D^T u
  std::vector<Index> active_set;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  bool polished = false;  // solution certified exactly on its active set
  int iterations = 0;
  std::optional<SpectralFactorization> spectral;
};

struct PathFit {
  std::vector<double> lambdas;
  std::vector<FitResult> fits;

  bool all_converged() const;
};

/// Log-spaced descending grid from lambda_max to lambda_min.
std::vector<double> log_grid(double lambda_max, double lambda_min, int count);
/// Throws unless the grid is non-empty, positive and strictly monotone.
void check_grid(std::span<const double> grid);

/// (p - 1) x p first-difference matrix with rows e_i - e_{i+1}.
Eigen::MatrixXd fused_difference_matrix(Index p);

// Lasso: 1/2 ||y - X b||^2 + lambda ||b||_1, coordinate descent with an exact
// active-set polish.
FitResult fit_lasso_at(const Dataset& data, double lambda, const SolverOptions& opts = {},
                       const FitResult* warm = nullptr);
PathFit fit_lasso(const Dataset& data, std::span<const double> grid,
                  const SolverOptions& opts = {});

// Generalized lasso: 1/2 ||y - X b||^2 + lambda ||D b||_1.
FitResult fit_genlasso_at(const Dataset& data, const Eigen::MatrixXd& d, double lambda,
                          const SolverOptions& opts = {}, const FitResult* warm = nullptr);
PathFit fit_genlasso(const Dataset& data, const Eigen::MatrixXd& d, std::span<const double> grid,
                     const SolverOptions& opts = {});

// Linear SVM: sum_j (1 - y_j x_j^T b)_+ + lambda / 2 ||b||^2.
FitResult fit_svm_at(const Dataset& data, double lambda, const SolverOptions& opts = {},
                     const FitResult* warm = nullptr);
PathFit fit_svm(const Dataset& data, std::span<const double> grid, const SolverOptions& opts = {});

// Matrix sensing: 1/2 sum_j (y_j - <X_j, B>)^2 + lambda ||B||_*.
FitResult fit_nuclear_at(const MatrixDataset& data, double lambda, const SolverOptions& opts = {},
                         const FitResult* warm = nullptr);
PathFit fit_nuclear(const MatrixDataset& data, std::span<const double> grid,
                    const SolverOptions& opts = {});

// Smooth losses (squared, logistic) with ridge or l1.
FitResult fit_smooth_at(const Dataset& data, LossKind loss, RegKind reg, double lambda,
                        const SolverOptions& opts = {}, const FitResult* warm = nullptr);
PathFit fit_smooth(const Dataset& data, LossKind loss, RegKind reg, std::span<const double> grid,
                   const SolverOptions& opts = {});

/// Loss + regularizer + lambda grid + solver tolerances; fully determines a path.
struct ModelSpec {
  LossKind loss = LossKind::squared;
  RegKind reg = RegKind::l1;
  Eigen::MatrixXd D;  // generalized-l1 only
  std::vector<double> lambdas;
  SolverOptions solver;

  RegularizerSpec regularizer(double lambda) const;
  std::string name() const;
  /// Throws if the loss/regularizer pairing has no solver.
  void validate() const;
};

FitResult fit_at(const ModelSpec& model, const Dataset& data, double lambda,
                 const FitResult* warm = nullptr);
PathFit fit_path(const ModelSpec& model, const Dataset& data);
FitResult fit_at(const ModelSpec& model, const MatrixDataset& data, double lambda,
                 const FitResult* warm = nullptr);
PathFit fit_path(const ModelSpec& model, const MatrixDataset& data);

/// Objective of the full model at coefficients beta.
double model_objective(const ModelSpec& model, const Dataset& data, double lambda,
                       const Eigen::VectorXd& beta);
double nuclear_objective(const MatrixDataset& data, double lambda, const Eigen::MatrixXd& b);

/// Dual vector theta_j = -loss'(x_j^T b; y_j) for a differentiable loss.
Eigen::VectorXd smooth_dual(LossKind loss, const Eigen::VectorXd& fitted, const Eigen::VectorXd& y);

}  // namespace alo

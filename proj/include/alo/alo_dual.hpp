#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "alo/alo_primal.hpp"
#include "alo/model_core.hpp"
#include "alo/solvers.hpp"

namespace alo {

/// Weighted least-squares form of a smooth-loss dual: K_jj = sqrt(loss*''(-theta_j)),
/// X_u = K^{-1} X, y_u = (theta_j loss*''_j + yhat_j) / K_jj.
struct DualReduction {
  Eigen::VectorXd K;
  Eigen::MatrixXd Xu;
  Eigen::VectorXd yu;
};

DualReduction dual_reduce(const FitResult& fit, const Dataset& data, LossKind loss);

enum class JacobianSource { lasso_equicorrelation, genlasso_nullspace, ridge_resolvent, numeric_prox };

const char* to_string(JacobianSource source);

/// Jacobian of the dual proximal map at y (n x n).
struct ProjectionJacobian {
  Eigen::MatrixXd J;
  JacobianSource source = JacobianSource::lasso_equicorrelation;
  double symmetry_defect = 0.0;  // max |J - J^T|
};

/// E = {j : |X_j^T theta| >= lambda (1 - tol)}.
std::vector<Index> equicorrelation_set(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta,
                                       double lambda, double tol = 1e-8);

/// I - X_E (X_E^T X_E)^{-1} X_E^T; throws Error{rank_deficient} if X_E is.
ProjectionJacobian lasso_jacobian(const Eigen::MatrixXd& x, const std::vector<Index>& e);
/// I - X (X^T X + lambda I)^{-1} X^T.
ProjectionJacobian ridge_jacobian(const Eigen::MatrixXd& x, double lambda);
/// I - A A^+ with A = X B, B an orthonormal basis of null(D_{-E}).
ProjectionJacobian genlasso_jacobian(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                     const std::vector<Index>& e);

/// Central-difference Jacobian of a map. Throws Error{singular_point} when
/// one-sided differences disagree by more than kink_tol, which happens at a
/// nondifferentiable point of a piecewise-affine map.
ProjectionJacobian prox_jacobian_numeric(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map, const Eigen::VectorXd& point,
    double step = 1e-6, double kink_tol = 1e-3);

/// Squared loss + l1: y_loo_i = y_i - theta_i / J_ii.
Predictions alo_dual_lasso(const FitResult& fit, const Dataset& data, double lambda,
                           double tol = 1e-8);

/// Smooth loss with l1 or ridge through the reduction; `jac` (n x n, on the
/// reduced problem) overrides the analytic Jacobian.
Predictions alo_dual_general(const FitResult& fit, const Dataset& data, LossKind loss,
                             const RegularizerSpec& reg, const ProjectionJacobian* jac = nullptr,
                             double tol = 1e-8);

/// Squared loss + lambda ||D b||_1 from the dual vector u of the fit.
Predictions alo_dual_genlasso(const FitResult& fit, const Dataset& data, const Eigen::MatrixXd& d,
                              double lambda, double tol = 1e-8);

}  // namespace alo

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "alo/smoothing.hpp"
#include "alo/solvers.hpp"

namespace alo {

/// Hessian of B -> sum_t r(sigma_t(B)) expressed in the rotated basis
/// Q_(s,t) = vec(u_s v_t^T), index s * p2 + t. `slope` and `curv` hold
/// r'(sigma_t) and r''(sigma_t) for t < min(p1, p2). Only entries whose row
/// and column are both flagged in `keep` (when given) are evaluated; the
/// caller guarantees no division by a vanishing sigma_s + sigma_t there.
Eigen::MatrixXd spectral_hessian_rotated(const Eigen::VectorXd& sigma, const Eigen::VectorXd& slope,
                                         const Eigen::VectorXd& curv, Index p1, Index p2,
                                         const std::vector<char>* keep = nullptr);

/// Q = kron(U, V): column s * p2 + t is vec(u_s v_t^T) in row-major order.
Eigen::MatrixXd rotation_basis(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

struct SpectralHessian {
  Eigen::MatrixXd rotated;   // Q^T H Q
  Eigen::MatrixXd standard;  // H in row-major vec(B) coordinates
};

/// Requires distinct, nonzero singular values; throws
/// Error{degenerate_spectrum} otherwise.
SpectralHessian spectral_hessian(const SpectralFactorization& f, const ScalarFunction& r,
                                 double separation_tol = 1e-8);

}  // namespace alo

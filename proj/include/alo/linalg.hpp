#pragma once

#include <Eigen/Dense>

namespace alo::linalg {

/// Cholesky factor of a symmetric positive (semi)definite matrix. When the
/// plain factorization fails a ridge of 1e-10 * trace / dim is added once and
/// recorded in `jitter`.
struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt.solve(rhs); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt.solve(rhs); }
  Eigen::MatrixXd inverse() const;
};

/// Throws Error{singular_system} mentioning `context` if even the jittered
/// matrix cannot be factored.
SpdFactor factor_spd(const Eigen::MatrixXd& m, const char* context);

/// Diagonal of Z * M^{-1} * Z^T for SPD M given by its factor.
Eigen::VectorXd quad_diagonal(const SpdFactor& factor, const Eigen::MatrixXd& z);

/// Orthonormal basis of the null space of `a` (rows are constraints). Singular
/// values below rel_tol * sigma_max count as zero. An empty `a` yields I.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, Eigen::Index cols, double rel_tol = 1e-10);

/// Orthonormal basis of range(a), pseudoinverse tolerance rel_tol * sigma_max.
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

/// Numerical rank: singular values above rel_tol * max(sigma_max, scale).
Eigen::Index numerical_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-10, double scale = 0.0);

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

}  // namespace alo::linalg

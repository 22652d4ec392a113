#include "alo/linalg.hpp"

#include <algorithm>
#include <string>

#include "alo/error.hpp"

namespace alo::linalg {

Eigen::MatrixXd SpdFactor::inverse() const {
  const auto n = llt.matrixLLT().rows();
  return llt.solve(Eigen::MatrixXd::Identity(n, n));
}

namespace {

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  if (diag.size() == 0) return true;
  if (!diag.allFinite()) return false;
  // Reject factors whose pivots collapse relative to the largest one.
  return diag.minCoeff() > 1e-13 * diag.maxCoeff();
}

}  // namespace

SpdFactor factor_spd(const Eigen::MatrixXd& m, const char* context) {
  SpdFactor f;
  f.llt.compute(m);
  if (factor_ok(f.llt)) return f;
  const auto dim = m.rows();
  const double trace = m.trace();
  f.jitter = 1e-10 * (trace > 0 ? trace : 1.0) / static_cast<double>(dim > 0 ? dim : 1);
  Eigen::MatrixXd shifted = m;
  shifted.diagonal().array() += f.jitter;
  f.llt.compute(shifted);
  if (f.llt.info() != Eigen::Success || !f.llt.matrixLLT().diagonal().allFinite()) {
    throw Error(ErrorKind::singular_system, std::string(context) + ": matrix not positive definite");
  }
  return f;
}

Eigen::VectorXd quad_diagonal(const SpdFactor& factor, const Eigen::MatrixXd& z) {
  // L^{-1} Z^T column norms give z_i^T M^{-1} z_i.
  Eigen::MatrixXd w = z.transpose();
  factor.llt.matrixL().solveInPlace(w);
  return w.colwise().squaredNorm().transpose();
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, Eigen::Index cols, double rel_tol) {
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax && s(i) > 0) ++rank;
  }
  return svd.matrixV().rightCols(cols - rank);
}

Eigen::MatrixXd range_basis(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return Eigen::MatrixXd(a.rows(), 0);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax && s(i) > 0) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& a, double rel_tol, double scale) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const double cut = rel_tol * std::max(s(0), scale);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut && s(i) > 0) ++rank;
  }
  return rank;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return Eigen::MatrixXd(a.cols(), a.rows());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0) && s(i) > 0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace alo::linalg

#include "alo/alo_dual.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "alo/error.hpp"
#include "alo/linalg.hpp"

namespace alo {

namespace {

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& x, const std::vector<Index>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = x.col(cols[k]);
  return out;
}

// Diagonal of the orthogonal projection onto range(a). Uses the normal
// equations when a has full column rank and an SVD basis otherwise.
Eigen::VectorXd projection_diagonal(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return Eigen::VectorXd::Zero(a.rows());
  if (a.cols() <= a.rows()) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(a.cols(), a.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
    if (llt.info() == Eigen::Success) {
      const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
      if (piv.minCoeff() > 1e-6 * piv.maxCoeff()) {
        return llt.matrixL().solve(a.transpose()).colwise().squaredNorm().transpose();
      }
    }
  }
  return linalg::range_basis(a).rowwise().squaredNorm();
}

Eigen::MatrixXd projection(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return Eigen::MatrixXd::Zero(a.rows(), a.rows());
  const Eigen::MatrixXd q = linalg::range_basis(a);
  return q * q.transpose();
}

Predictions from_jacobian_diag(const Eigen::VectorXd& k, const Eigen::VectorXd& yu,
                               const Eigen::VectorXd& theta, const Eigen::VectorXd& jdiag,
                               const Eigen::VectorXd& fitted) {
  Predictions out(static_cast<std::size_t>(yu.size()));
  for (Index i = 0; i < yu.size(); ++i) {
    ObsPrediction& o = out[static_cast<std::size_t>(i)];
    o.index = i;
    if (jdiag(i) < kDegenerateTol) {
      o.degenerate = true;
      o.reason = "observation in projection range (J_ii near zero)";
      o.y_loo = fitted(i);
      continue;
    }
    o.y_loo = k(i) * (yu(i) - k(i) * theta(i) / jdiag(i));
  }
  return out;
}

void require_converged(const FitResult& fit) {
  if (!fit.converged) {
    std::ostringstream os;
    os.precision(17);
    os << "refusing an unconverged fit at lambda=" << fit.lambda;
    throw Error(ErrorKind::not_converged, os.str());
  }
}

}  // namespace

const char* to_string(JacobianSource source) {
  switch (source) {
    case JacobianSource::lasso_equicorrelation: return "lasso-equicorrelation";
    case JacobianSource::genlasso_nullspace: return "genlasso-nullspace";
    case JacobianSource::ridge_resolvent: return "ridge-resolvent";
    case JacobianSource::numeric_prox: return "numeric-prox";
  }
  return "unknown";
}

DualReduction dual_reduce(const FitResult& fit, const Dataset& data, LossKind loss) {
  const Index n = data.n();
  DualReduction r;
  if (loss == LossKind::squared) {
    r.K = Eigen::VectorXd::Ones(n);
    r.Xu = data.X;
    r.yu = data.y;
    return r;
  }
  if (loss == LossKind::hinge) {
    throw Error(ErrorKind::unsupported,
                "hinge conjugate has no second derivative; nonsmooth losses use the primal route");
  }
  const Eigen::VectorXd fitted = data.X * fit.beta;
  r.K.resize(n);
  r.yu.resize(n);
  for (Index j = 0; j < n; ++j) {
    const double c2 = conj_loss_deriv(loss, -fit.theta(j), data.y(j), 2);
    if (!(c2 > 0.0) || !std::isfinite(c2)) {
      throw Error(ErrorKind::infeasible_dual,
                  "conjugate curvature is not positive at observation " + std::to_string(j));
    }
    r.K(j) = std::sqrt(c2);
    r.yu(j) = (fit.theta(j) * c2 + fitted(j)) / r.K(j);
  }
  r.Xu = r.K.cwiseInverse().asDiagonal() * data.X;
  return r;
}

std::vector<Index> equicorrelation_set(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta,
                                       double lambda, double tol) {
  const Eigen::VectorXd c = x.transpose() * theta;
  std::vector<Index> e;
  for (Index j = 0; j < c.size(); ++j) {
    if (std::abs(c(j)) >= lambda * (1.0 - tol)) e.push_back(j);
  }
  return e;
}

ProjectionJacobian lasso_jacobian(const Eigen::MatrixXd& x, const std::vector<Index>& e) {
  const Index n = x.rows();
  ProjectionJacobian jac;
  jac.source = JacobianSource::lasso_equicorrelation;
  jac.J = Eigen::MatrixXd::Identity(n, n) - projection(select_cols(x, e));
  return jac;
}

ProjectionJacobian ridge_jacobian(const Eigen::MatrixXd& x, double lambda) {
  const Index n = x.rows();
  Eigen::MatrixXd m = x.transpose() * x;
  m.diagonal().array() += lambda;
  const linalg::SpdFactor fac = linalg::factor_spd(m, "ridge dual Jacobian");
  ProjectionJacobian jac;
  jac.source = JacobianSource::ridge_resolvent;
  jac.J = Eigen::MatrixXd::Identity(n, n) - x * fac.solve(Eigen::MatrixXd(x.transpose()));
  jac.symmetry_defect = (jac.J - jac.J.transpose()).cwiseAbs().maxCoeff();
  jac.J = 0.5 * (jac.J + jac.J.transpose()).eval();
  return jac;
}

namespace {

Eigen::MatrixXd genlasso_design(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                const std::vector<Index>& e) {
  std::vector<char> in_e(static_cast<std::size_t>(d.rows()), 0);
  for (Index i : e) in_e[static_cast<std::size_t>(i)] = 1;
  Eigen::MatrixXd rest(d.rows() - static_cast<Index>(e.size()), d.cols());
  for (Index i = 0, r = 0; i < d.rows(); ++i) {
    if (!in_e[static_cast<std::size_t>(i)]) rest.row(r++) = d.row(i);
  }
  const Eigen::MatrixXd basis = linalg::null_space(rest, d.cols());
  if (basis.cols() == 0) return Eigen::MatrixXd(x.rows(), 0);
  Eigen::MatrixXd a = x * basis;
  // measured against X itself: X B can collapse entirely to round-off
  if (linalg::numerical_rank(a, 1e-10, x.norm()) < basis.cols()) {
    throw Error(ErrorKind::rank_deficient,
                "X restricted to the null space of the free constraints is rank deficient; "
                "pseudoinverse path unreliable");
  }
  return a;
}

}  // namespace

ProjectionJacobian genlasso_jacobian(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                     const std::vector<Index>& e) {
  const Index n = x.rows();
  ProjectionJacobian jac;
  jac.source = JacobianSource::genlasso_nullspace;
  jac.J = Eigen::MatrixXd::Identity(n, n) - projection(genlasso_design(x, d, e));
  return jac;
}

ProjectionJacobian prox_jacobian_numeric(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map, const Eigen::VectorXd& point,
    double step, double kink_tol) {
  if (!(step > 0.0) || point.cwiseAbs().maxCoeff() + step == point.cwiseAbs().maxCoeff()) {
    throw Error(ErrorKind::invalid_argument, "finite-difference step underflows");
  }
  const Eigen::VectorXd f0 = map(point);
  ProjectionJacobian jac;
  jac.source = JacobianSource::numeric_prox;
  jac.J.resize(f0.size(), point.size());
  for (Index k = 0; k < point.size(); ++k) {
    Eigen::VectorXd xp = point;
    Eigen::VectorXd xm = point;
    xp(k) += step;
    xm(k) -= step;
    const Eigen::VectorXd fp = map(xp);
    const Eigen::VectorXd fm = map(xm);
    const double gap = ((fp - f0) - (f0 - fm)).cwiseAbs().maxCoeff() / step;
    if (gap > kink_tol) {
      throw Error(ErrorKind::singular_point,
                  "map is not differentiable at this point (coordinate " + std::to_string(k) +
                      "); use the analytic Jacobian");
    }
    jac.J.col(k) = (fp - fm) / (2.0 * step);
  }
  if (jac.J.rows() == jac.J.cols()) {
    jac.symmetry_defect = (jac.J - jac.J.transpose()).cwiseAbs().maxCoeff();
  }
  return jac;
}

Predictions alo_dual_lasso(const FitResult& fit, const Dataset& data, double lambda, double tol) {
  require_converged(fit);
  const auto e = equicorrelation_set(data.X, fit.theta, lambda, tol);
  const Eigen::VectorXd jdiag =
      Eigen::VectorXd::Ones(data.n()) - projection_diagonal(select_cols(data.X, e));
  return from_jacobian_diag(Eigen::VectorXd::Ones(data.n()), data.y, fit.theta, jdiag,
                            data.X * fit.beta);
}

Predictions alo_dual_general(const FitResult& fit, const Dataset& data, LossKind loss,
                             const RegularizerSpec& reg, const ProjectionJacobian* jac,
                             double tol) {
  require_converged(fit);
  const DualReduction red = dual_reduce(fit, data, loss);
  const Index n = data.n();
  Eigen::VectorXd jdiag;
  if (jac != nullptr) {
    if (jac->J.rows() != n || jac->J.cols() != n) {
      throw Error(ErrorKind::invalid_argument, "Jacobian must be n x n");
    }
    jdiag = jac->J.diagonal();
  } else if (reg.kind == RegKind::l1) {
    const auto e = equicorrelation_set(data.X, fit.theta, reg.lambda, tol);
    jdiag = Eigen::VectorXd::Ones(n) - projection_diagonal(select_cols(red.Xu, e));
  } else if (reg.kind == RegKind::ridge) {
    Eigen::MatrixXd m = red.Xu.transpose() * red.Xu;
    m.diagonal().array() += reg.lambda;
    const linalg::SpdFactor fac = linalg::factor_spd(m, "ridge dual Jacobian");
    jdiag = Eigen::VectorXd::Ones(n) - linalg::quad_diagonal(fac, red.Xu);
  } else if (reg.kind == RegKind::generalized_l1) {
    if (loss != LossKind::squared) {
      throw Error(ErrorKind::unsupported, "generalized-l1 dual route covers squared loss");
    }
    return alo_dual_genlasso(fit, data, reg.D, reg.lambda, tol);
  } else {
    throw Error(ErrorKind::unsupported, "no analytic dual Jacobian for this regularizer");
  }
  return from_jacobian_diag(red.K, red.yu, fit.theta, jdiag, data.X * fit.beta);
}

Predictions alo_dual_genlasso(const FitResult& fit, const Dataset& data, const Eigen::MatrixXd& d,
                              double lambda, double tol) {
  require_converged(fit);
  if (fit.u.size() != d.rows()) {
    throw Error(ErrorKind::invalid_argument, "fit carries no dual vector u matching D");
  }
  std::vector<Index> e;
  for (Index i = 0; i < fit.u.size(); ++i) {
    if (std::abs(fit.u(i)) >= lambda * (1.0 - tol)) e.push_back(i);
  }
  const Eigen::MatrixXd a = genlasso_design(data.X, d, e);
  const Eigen::VectorXd jdiag = Eigen::VectorXd::Ones(data.n()) - projection_diagonal(a);
  return from_jacobian_diag(Eigen::VectorXd::Ones(data.n()), data.y, fit.theta, jdiag,
                            data.X * fit.beta);
}

}  // namespace alo

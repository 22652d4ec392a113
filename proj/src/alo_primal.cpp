#include "alo/alo_primal.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "alo/error.hpp"
#include "alo/linalg.hpp"
#include "alo/spectral.hpp"

namespace alo {

namespace {

std::string at_lambda(const char* what, double lambda) {
  std::ostringstream os;
  os.precision(17);
  os << what << " at lambda=" << lambda;
  return os.str();
}

void require_converged(const FitResult& fit) {
  if (!fit.converged) {
    throw Error(ErrorKind::not_converged, at_lambda("refusing an unconverged fit", fit.lambda));
  }
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& x, const std::vector<Index>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = x.col(cols[k]);
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

Eigen::VectorXd derivs(LossKind loss, const Eigen::VectorXd& u, const Eigen::VectorXd& y, int order) {
  Eigen::VectorXd d(u.size());
  for (Index j = 0; j < u.size(); ++j) d(j) = loss_deriv(loss, u(j), y(j), order);
  return d;
}

bool near_kink(LossKind loss, double u, double y, double tol) {
  const Eigen::VectorXd kinks = loss_kinks(loss, y);
  for (Index k = 0; k < kinks.size(); ++k) {
    if (std::abs(u - kinks(k)) < tol) return true;
  }
  return false;
}

// Cholesky of a Gram matrix that must be nonsingular; nullopt when it is not.
std::optional<Eigen::LLT<Eigen::MatrixXd>> strict_llt(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
  if (piv.size() > 0 && piv.minCoeff() <= 1e-7 * piv.maxCoeff()) return std::nullopt;
  return llt;
}

}  // namespace

Predictions newton_step(const Eigen::VectorXd& fitted, const Eigen::VectorXd& h_diag,
                        const Eigen::VectorXd& d1, const Eigen::VectorXd& d2) {
  Predictions out(static_cast<std::size_t>(fitted.size()));
  for (Index i = 0; i < fitted.size(); ++i) {
    ObsPrediction& o = out[static_cast<std::size_t>(i)];
    o.index = i;
    const double den = 1.0 - h_diag(i) * d2(i);
    if (std::abs(den) < kDegenerateTol) {
      o.degenerate = true;
      o.reason = "1 - H_ii * loss'' vanishes";
      o.y_loo = fitted(i);
      continue;
    }
    o.y_loo = fitted(i) + h_diag(i) * d1(i) / den;
    if (!std::isfinite(o.y_loo)) {
      o.degenerate = true;
      o.reason = "non-finite prediction";
      o.y_loo = fitted(i);
    }
  }
  return out;
}

Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& xa, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& reg_hess, const char* context) {
  if (xa.cols() == 0) return Eigen::VectorXd::Zero(xa.rows());
  Eigen::MatrixXd m = xa.transpose() * w.asDiagonal() * xa;
  m.diagonal() += reg_hess;
  const linalg::SpdFactor fac = linalg::factor_spd(m, context);
  return linalg::quad_diagonal(fac, xa);
}

Predictions alo_smooth(const FitResult& fit, const Dataset& data, LossKind loss,
                       const RegularizerSpec& reg) {
  require_converged(fit);
  if (loss == LossKind::hinge) {
    throw Error(ErrorKind::unsupported, "hinge loss has a kink; use the nonsmooth-loss formula");
  }
  if (reg.kind != RegKind::ridge) {
    throw Error(ErrorKind::unsupported, "smooth formula needs a twice-differentiable regularizer");
  }
  const Eigen::VectorXd u = data.X * fit.beta;
  const Eigen::VectorXd d1 = derivs(loss, u, data.y, 1);
  const Eigen::VectorXd d2 = derivs(loss, u, data.y, 2);
  const std::string ctx = at_lambda("smooth ALO inner matrix", reg.lambda);
  const Eigen::VectorXd h =
      hat_diagonal(data.X, d2, Eigen::VectorXd::Constant(data.p(), reg.lambda), ctx.c_str());
  return newton_step(u, h, d1, d2);
}

NonsmoothLossDetail alo_nonsmooth_loss_detail(const FitResult& fit, const Dataset& data,
                                              LossKind loss, const RegularizerSpec& reg,
                                              double kink_tol) {
  require_converged(fit);
  if (reg.kind != RegKind::ridge) {
    throw Error(ErrorKind::unsupported, "nonsmooth-loss formula needs a smooth regularizer");
  }
  const Index n = data.n();
  const Index p = data.p();
  const Eigen::VectorXd u = data.X * fit.beta;
  std::vector<Index> sv;
  std::vector<Index> ss;
  for (Index j = 0; j < n; ++j) {
    (near_kink(loss, u(j), data.y(j), kink_tol) ? sv : ss).push_back(j);
  }
  Eigen::VectorXd d1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd d2 = Eigen::VectorXd::Zero(n);
  for (Index j : ss) {
    d1(j) = loss_deriv(loss, u(j), data.y(j), 1);
    d2(j) = loss_deriv(loss, u(j), data.y(j), 2);
  }
  // Y = grad^2 R + X_S^T diag(loss'') X_S; rows in V carry zero weight.
  Eigen::MatrixXd y_mat = data.X.transpose() * d2.asDiagonal() * data.X;
  y_mat.diagonal().array() += reg.lambda;
  const std::string ctx = at_lambda("nonsmooth-loss ALO inner matrix", reg.lambda);
  const linalg::SpdFactor fac = linalg::factor_spd(y_mat, ctx.c_str());
  Eigen::VectorXd w = linalg::quad_diagonal(fac, data.X);

  NonsmoothLossDetail out;
  out.singular_set = sv;
  out.subgradient = d1;
  out.weight = Eigen::VectorXd::Zero(n);
  out.predictions.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    out.predictions[static_cast<std::size_t>(i)].index = i;
    out.predictions[static_cast<std::size_t>(i)].y_loo = u(i);
  }
  auto flag = [&](Index i, const char* why) {
    auto& o = out.predictions[static_cast<std::size_t>(i)];
    o.degenerate = true;
    o.reason = why;
  };

  const Index nv = static_cast<Index>(sv.size());
  std::optional<Eigen::LLT<Eigen::MatrixXd>> m_llt;
  bool v_ok = nv == 0;
  if (nv > 0) {
    const Eigen::MatrixXd xv = select_rows(data.X, sv);
    const Eigen::MatrixXd z = fac.solve(Eigen::MatrixXd(xv.transpose()));  // Y^{-1} X_V^T
    const Eigen::MatrixXd m = xv * z;
    const Eigen::MatrixXd pz = data.X * z;  // x_i^T Y^{-1} X_V^T
    m_llt = nv <= p ? strict_llt(m) : std::nullopt;
    if (m_llt) {
      const Eigen::MatrixXd l_inv_p = m_llt->matrixL().solve(pz.transpose());
      w -= l_inv_p.colwise().squaredNorm().transpose();
      const Eigen::MatrixXd m_inv = m_llt->solve(Eigen::MatrixXd::Identity(nv, nv));
      // Subgradients on V from stationarity: X_V^T g_V = -(grad R + X_S^T loss'_S).
      const Eigen::VectorXd rhs = -(reg.lambda * fit.beta + data.X.transpose() * d1);
      const auto g_llt = strict_llt(xv * xv.transpose());
      if (g_llt) {
        const Eigen::VectorXd gv = g_llt->solve(Eigen::VectorXd(xv * rhs));
        v_ok = true;
        for (Index k = 0; k < nv; ++k) {
          const Index i = sv[static_cast<std::size_t>(k)];
          out.subgradient(i) = gv(k);
          out.weight(i) = 1.0 / m_inv(k, k);
        }
      }
    } else {
      // S still has a well-defined limit through the pseudoinverse.
      const Eigen::MatrixXd m_pinv = linalg::pseudo_inverse(m);
      w -= (pz * m_pinv).cwiseProduct(pz).rowwise().sum();
    }
  }
  for (Index i : ss) {
    const double den = 1.0 - w(i) * d2(i);
    if (std::abs(den) < kDegenerateTol) {
      flag(i, "1 - W_ii * loss'' vanishes");
      continue;
    }
    out.weight(i) = w(i) / den;
  }
  for (Index i = 0; i < n; ++i) {
    auto& o = out.predictions[static_cast<std::size_t>(i)];
    if (o.degenerate) continue;
    const bool in_v = std::binary_search(sv.begin(), sv.end(), i);
    if (in_v && !v_ok) {
      flag(i, "rank-deficient singular set");
      continue;
    }
    o.y_loo = u(i) + out.weight(i) * out.subgradient(i);
  }
  return out;
}

Predictions alo_nonsmooth_loss(const FitResult& fit, const Dataset& data, LossKind loss,
                               const RegularizerSpec& reg, double kink_tol) {
  return alo_nonsmooth_loss_detail(fit, data, loss, reg, kink_tol).predictions;
}

NonsmoothLossDetail alo_svm_detail(const FitResult& fit, const Dataset& data, double lambda,
                                   double kink_tol) {
  require_converged(fit);
  const Index n = data.n();
  const Index p = data.p();
  const Eigen::VectorXd u = data.X * fit.beta;
  const Eigen::VectorXd margin = data.y.cwiseProduct(u);
  std::vector<Index> sv;
  Eigen::VectorXd sum_viol = Eigen::VectorXd::Zero(p);  // sum over S with margin < 1 of y_j x_j
  NonsmoothLossDetail out;
  out.subgradient = Eigen::VectorXd::Zero(n);
  out.weight = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) {
    if (std::abs(1.0 - margin(j)) < kink_tol) {
      sv.push_back(j);
    } else if (margin(j) < 1.0) {
      out.subgradient(j) = -data.y(j);
      sum_viol += data.y(j) * data.X.row(j).transpose();
    }
  }
  out.singular_set = sv;
  out.predictions.resize(static_cast<std::size_t>(n));
  const Index nv = static_cast<Index>(sv.size());
  const Eigen::VectorXd rownorm = data.X.rowwise().squaredNorm();
  bool v_ok = nv == 0;
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(n);  // x_i^T X_V^T (X_V X_V^T)^{-1} X_V x_i
  if (nv > 0) {
    const Eigen::MatrixXd xv = select_rows(data.X, sv);
    const Eigen::MatrixXd g = xv * xv.transpose();
    const auto llt = nv <= p ? strict_llt(g) : std::nullopt;
    const Eigen::MatrixXd cross = data.X * xv.transpose();
    if (llt) {
      proj = llt->matrixL().solve(cross.transpose()).colwise().squaredNorm().transpose();
      const Eigen::MatrixXd g_inv = llt->solve(Eigen::MatrixXd::Identity(nv, nv));
      const Eigen::VectorXd gv = llt->solve(Eigen::VectorXd(xv * (sum_viol - lambda * fit.beta)));
      for (Index k = 0; k < nv; ++k) {
        const Index i = sv[static_cast<std::size_t>(k)];
        out.subgradient(i) = gv(k);
        out.weight(i) = 1.0 / (lambda * g_inv(k, k));
      }
      v_ok = true;
    } else {
      proj = (cross * linalg::pseudo_inverse(g)).cwiseProduct(cross).rowwise().sum();
    }
  }
  for (Index i = 0; i < n; ++i) {
    auto& o = out.predictions[static_cast<std::size_t>(i)];
    o.index = i;
    o.y_loo = u(i);
    const bool in_v = std::binary_search(sv.begin(), sv.end(), i);
    if (in_v) {
      if (!v_ok) {
        o.degenerate = true;
        o.reason = "rank-deficient singular set";
        continue;
      }
    } else {
      out.weight(i) = (rownorm(i) - proj(i)) / lambda;
    }
    o.y_loo = u(i) + out.weight(i) * out.subgradient(i);
  }
  return out;
}

Predictions alo_svm(const FitResult& fit, const Dataset& data, double lambda, double kink_tol) {
  return alo_svm_detail(fit, data, lambda, kink_tol).predictions;
}

Predictions alo_nonsmooth_reg(const FitResult& fit, const Dataset& data, LossKind loss,
                              const RegularizerSpec& reg, double zero_tol) {
  require_converged(fit);
  if (loss == LossKind::hinge) {
    throw Error(ErrorKind::unsupported, "nonsmooth-regularizer formula needs a smooth loss");
  }
  std::vector<Index> active;
  double curvature = 0.0;
  if (reg.kind == RegKind::l1) {
    for (Index l = 0; l < fit.beta.size(); ++l) {
      if (std::abs(fit.beta(l)) > zero_tol) active.push_back(l);
    }
  } else if (reg.kind == RegKind::ridge) {
    for (Index l = 0; l < fit.beta.size(); ++l) active.push_back(l);
    curvature = reg.lambda;
  } else {
    throw Error(ErrorKind::unsupported, "separable regularizer formula covers l1 and ridge");
  }
  const Eigen::VectorXd u = data.X * fit.beta;
  const Eigen::VectorXd d1 = derivs(loss, u, data.y, 1);
  const Eigen::VectorXd d2 = derivs(loss, u, data.y, 2);
  const std::string ctx = at_lambda("active-set ALO inner matrix", reg.lambda);
  const Eigen::VectorXd h =
      hat_diagonal(select_cols(data.X, active), d2,
                   Eigen::VectorXd::Constant(static_cast<Index>(active.size()), curvature), ctx.c_str());
  return newton_step(u, h, d1, d2);
}

NuclearStructure nuclear_structure(const FitResult& fit, const MatrixDataset& data, double lambda,
                                   double rank_tol) {
  const Index p1 = data.p1;
  const Index p2 = data.p2;
  const Index q = std::min(p1, p2);
  const Eigen::MatrixXd b = fit.B.size() == p1 * p2 ? fit.B : unflatten(fit.beta, p1, p2);
  const SpectralFactorization f = spectral_factorization(b, rank_tol);
  const Index m = f.rank;
  NuclearStructure s;
  s.rank = m;
  s.sigma = Eigen::VectorXd::Zero(q);
  s.slope = Eigen::VectorXd::Ones(q);
  s.sigma.head(m) = f.sigma.head(m);
  s.U = f.U;
  s.V = f.V;
  if (m < q) {
    // Subgradient of ||.||_* on the complement, from G = (1/lambda) sum_j theta_j X_j.
    const Eigen::VectorXd theta = data.y - data.X * flatten(b);
    const Eigen::MatrixXd g = unflatten(data.X.transpose() * theta, p1, p2) / lambda;
    const Eigen::MatrixXd uc = f.U.rightCols(p1 - m);
    const Eigen::MatrixXd vc = f.V.rightCols(p2 - m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(uc.transpose() * g * vc,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    s.U.rightCols(p1 - m) = uc * svd.matrixU();
    s.V.rightCols(p2 - m) = vc * svd.matrixV();
    const Eigen::VectorXd gs = svd.singularValues();
    for (Index t = m; t < q; ++t) {
      s.slope(t) = gs(t - m);
      if (gs(t - m) >= 1.0 - 1e-6) s.strict_subgradient = false;
    }
  }
  for (Index k = 0; k < p1; ++k) {
    for (Index l = 0; l < p2; ++l) {
      if (k < m || l < m) s.active.push_back(k * p2 + l);
    }
  }
  return s;
}

Eigen::MatrixXd nuclear_curvature(const NuclearStructure& s, Index p1, Index p2) {
  std::vector<char> keep(static_cast<std::size_t>(p1 * p2), 0);
  for (Index idx : s.active) keep[static_cast<std::size_t>(idx)] = 1;
  const Eigen::MatrixXd full = spectral_hessian_rotated(
      s.sigma, s.slope, Eigen::VectorXd::Zero(s.sigma.size()), p1, p2, &keep);
  const Index e = static_cast<Index>(s.active.size());
  Eigen::MatrixXd out(e, e);
  for (Index a = 0; a < e; ++a) {
    for (Index c = 0; c < e; ++c) {
      out(a, c) = full(s.active[static_cast<std::size_t>(a)], s.active[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

Predictions alo_nuclear(const FitResult& fit, const MatrixDataset& data, double lambda,
                        double rank_tol) {
  require_converged(fit);
  const Index n = data.n();
  const Eigen::VectorXd fitted = data.X * (fit.B.size() > 0 ? flatten(fit.B) : fit.beta);
  const Eigen::VectorXd resid = fitted - data.y;
  const NuclearStructure s = nuclear_structure(fit, data, lambda, rank_tol);
  if (s.rank == 0) {
    return newton_step(fitted, Eigen::VectorXd::Zero(n), resid, Eigen::VectorXd::Ones(n));
  }
  if (!s.strict_subgradient) {
    Predictions out(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = {i, fitted(i), true,
                                          "subgradient not strictly inside the unit ball"};
    }
    return out;
  }
  const Index e = static_cast<Index>(s.active.size());
  Eigen::MatrixXd xe(n, e);
  for (Index j = 0; j < n; ++j) {
    const Eigen::MatrixXd rotated = s.U.transpose() * data.observation(j) * s.V;
    for (Index a = 0; a < e; ++a) {
      const Index idx = s.active[static_cast<std::size_t>(a)];
      xe(j, a) = rotated(idx / data.p2, idx % data.p2);
    }
  }
  Eigen::MatrixXd inner = xe.transpose() * xe + lambda * nuclear_curvature(s, data.p1, data.p2);
  const std::string ctx = at_lambda("nuclear ALO inner matrix", lambda);
  const linalg::SpdFactor fac = linalg::factor_spd(inner, ctx.c_str());
  const Eigen::VectorXd h = linalg::quad_diagonal(fac, xe);
  return newton_step(fitted, h, resid, Eigen::VectorXd::Ones(n));
}

}  // namespace alo

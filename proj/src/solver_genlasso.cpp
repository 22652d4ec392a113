#include <algorithm>
#include <cmath>

#include "alo/error.hpp"
#include "alo/linalg.hpp"
#include "alo/solvers.hpp"

namespace alo {

namespace {

struct Problem {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const Eigen::MatrixXd& D;
  double lambda;
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
};

// Orthonormal basis of null(a) from a column-pivoted QR of a^T.
Eigen::MatrixXd null_basis_qr(const Eigen::MatrixXd& a, Index p) {
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(p, p);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
  return q.rightCols(p - r);
}

struct Candidate {
  Eigen::VectorXd beta;
  Eigen::VectorXd u;
};

// Exact solution given the boundary set E and the signs of u on E. Returns
// false unless primal signs and the dual box constraint check out.
bool polish(const Problem& pr, const std::vector<Index>& boundary, const Eigen::VectorXd& signs,
            Candidate& out) {
  const Index m = pr.D.rows();
  const Index p = pr.D.cols();
  std::vector<char> in_e(static_cast<std::size_t>(m), 0);
  for (Index i : boundary) in_e[static_cast<std::size_t>(i)] = 1;
  const Index ne = static_cast<Index>(boundary.size());
  Eigen::MatrixXd de(ne, p);
  Eigen::MatrixXd dr(m - ne, p);
  std::vector<Index> rest;
  for (Index i = 0, a = 0, b = 0; i < m; ++i) {
    if (in_e[static_cast<std::size_t>(i)]) {
      de.row(a++) = pr.D.row(i);
    } else {
      dr.row(b++) = pr.D.row(i);
      rest.push_back(i);
    }
  }
  const Eigen::MatrixXd nb = null_basis_qr(dr, p);
  const Index d = nb.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd pen = ne > 0 ? Eigen::VectorXd(de.transpose() * signs) : Eigen::VectorXd::Zero(p);
  if (d > 0) {
    const Eigen::MatrixXd gram = nb.transpose() * pr.xtx * nb;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd piv = llt.matrixLLT().diagonal();
    if (piv.minCoeff() <= 1e-7 * piv.maxCoeff()) return false;
    const Eigen::VectorXd c = llt.solve(nb.transpose() * (pr.xty - pr.lambda * pen));
    beta = nb * c;
  } else if (ne > 0) {
    return false;
  }
  if (ne > 0) {
    const Eigen::VectorXd db = de * beta;
    const double tiny = 1e-12 * std::max(1.0, beta.cwiseAbs().maxCoeff());
    for (Index k = 0; k < ne; ++k) {
      if (!(db(k) * signs(k) > tiny)) return false;
    }
  }
  // D_rest^T u_rest = X^T theta - lambda D_E^T s
  const Eigen::VectorXd v = pr.xty - pr.xtx * beta - pr.lambda * pen;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  if (!rest.empty()) {
    const Eigen::VectorXd ur = dr.transpose().colPivHouseholderQr().solve(v);
    if ((dr.transpose() * ur - v).norm() > 1e-8 * std::max(1.0, v.norm() + pr.lambda)) return false;
    if (ur.size() > 0 && ur.cwiseAbs().maxCoeff() > pr.lambda * (1.0 + 1e-10)) return false;
    for (std::size_t k = 0; k < rest.size(); ++k) u(rest[k]) = ur(static_cast<Index>(k));
  } else if (v.norm() > 1e-8 * std::max(1.0, pr.lambda)) {
    return false;
  }
  for (Index k = 0; k < ne; ++k) u(boundary[static_cast<std::size_t>(k)]) = pr.lambda * signs(k);
  out.beta = beta;
  out.u = u;
  return true;
}

double kkt_of(const Problem& pr, const Eigen::VectorXd& beta, const Eigen::VectorXd& u,
              double zero_tol) {
  double worst = (pr.xty - pr.xtx * beta - pr.D.transpose() * u).cwiseAbs().maxCoeff();
  const Eigen::VectorXd db = pr.D * beta;
  for (Index i = 0; i < db.size(); ++i) {
    worst = std::max(worst, std::max(0.0, std::abs(u(i)) - pr.lambda));
    if (std::abs(db(i)) > zero_tol) {
      worst = std::max(worst, std::abs(u(i) - pr.lambda * (db(i) > 0 ? 1.0 : -1.0)));
    }
  }
  return worst;
}

FitResult finish(const Problem& pr, const Eigen::VectorXd& beta, const Eigen::VectorXd& u,
                 int iterations, bool polished, const SolverOptions& opts) {
  FitResult f;
  f.lambda = pr.lambda;
  f.beta = beta;
  f.u = u;
  f.theta = pr.y - pr.X * beta;
  f.objective = 0.5 * f.theta.squaredNorm() + pr.lambda * (pr.D * beta).lpNorm<1>();
  f.kkt_residual = kkt_of(pr, beta, u, opts.zero_tol);
  for (Index i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) >= pr.lambda * (1.0 - opts.zero_tol)) f.active_set.push_back(i);
  }
  f.iterations = iterations;
  f.polished = polished;
  f.converged = f.kkt_residual <= opts.kkt_tol * std::max(1.0, pr.lambda);
  return f;
}

void boundary_from_u(const Eigen::VectorXd& u, double level, std::vector<Index>& e,
                     Eigen::VectorXd& s) {
  e.clear();
  for (Index i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) >= level) e.push_back(i);
  }
  s.resize(static_cast<Index>(e.size()));
  for (std::size_t k = 0; k < e.size(); ++k) s(static_cast<Index>(k)) = u(e[k]) > 0 ? 1.0 : -1.0;
}

}  // namespace

FitResult fit_genlasso_at(const Dataset& data, const Eigen::MatrixXd& d, double lambda,
                          const SolverOptions& opts, const FitResult* warm) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be positive");
  if (d.cols() != data.p()) {
    throw Error(ErrorKind::invalid_argument, "D has " + std::to_string(d.cols()) +
                                                 " columns but X has " + std::to_string(data.p()));
  }
  const Index p = data.p();
  const Index m = d.rows();
  Problem pr{data.X, data.y, d, lambda, data.X.transpose() * data.X, data.X.transpose() * data.y};

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  std::vector<Index> e;
  Eigen::VectorXd s;
  Candidate cand;
  if (warm != nullptr && warm->beta.size() == p && warm->u.size() == m && warm->lambda > 0.0) {
    beta = warm->beta;
    u = warm->u * std::min(1.0, lambda / warm->lambda);
    boundary_from_u(warm->u, warm->lambda * (1.0 - 1e-8), e, s);
    if (polish(pr, e, s, cand)) return finish(pr, cand.beta, cand.u, 0, true, opts);
  } else if (polish(pr, {}, Eigen::VectorXd(), cand)) {
    return finish(pr, cand.beta, cand.u, 0, true, opts);
  }

  // Scaled ADMM on z = D beta with w = u / rho.
  double rho = pr.xtx.trace() / std::max(1e-300, d.squaredNorm());
  if (!(rho > 0.0) || !std::isfinite(rho)) rho = 1.0;
  const Eigen::MatrixXd dtd = d.transpose() * d;
  auto factor = [&](double r) { return linalg::factor_spd(pr.xtx + r * dtd, "generalized lasso ADMM"); };
  linalg::SpdFactor fac = factor(rho);
  Eigen::VectorXd z = d * beta;
  Eigen::VectorXd w = u / rho;
  const double scale = std::max(1.0, pr.xty.norm());
  int iter = 0;
  std::vector<Index> last_e;
  while (iter < opts.max_iter) {
    ++iter;
    beta = fac.solve(Eigen::VectorXd(pr.xty + rho * d.transpose() * (z - w)));
    const Eigen::VectorXd db = d * beta;
    const Eigen::VectorXd z_old = z;
    z = soft_threshold(db + w, lambda / rho);
    w += db - z;
    const double r_pri = (db - z).norm();
    const double r_dual = rho * (d.transpose() * (z - z_old)).norm();

    if (iter % 25 == 0) {
      // Boundary set from the sparsity pattern of z.
      e.clear();
      for (Index i = 0; i < m; ++i) {
        if (z(i) != 0.0) e.push_back(i);
      }
      if (e != last_e || iter % 200 == 0) {
        s.resize(static_cast<Index>(e.size()));
        for (std::size_t k = 0; k < e.size(); ++k) s(static_cast<Index>(k)) = z(e[k]) > 0 ? 1.0 : -1.0;
        if (polish(pr, e, s, cand)) return finish(pr, cand.beta, cand.u, iter, true, opts);
        last_e = e;
      }
      if (r_pri < 1e-11 * scale && r_dual < 1e-11 * scale) break;
      if (iter % 50 == 0) {
        double next = rho;
        if (r_pri > 10.0 * r_dual) next = rho * 2.0;
        if (r_dual > 10.0 * r_pri) next = rho / 2.0;
        if (next != rho) {
          w *= rho / next;
          rho = next;
          fac = factor(rho);
        }
      }
    }
  }
  u = (rho * w).cwiseMax(-lambda).cwiseMin(lambda);
  return finish(pr, beta, u, iter, false, opts);
}

PathFit fit_genlasso(const Dataset& data, const Eigen::MatrixXd& d, std::span<const double> grid,
                     const SolverOptions& opts) {
  check_grid(grid);
  data.validate();
  PathFit path;
  path.lambdas.assign(grid.begin(), grid.end());
  path.fits.reserve(grid.size());
  const FitResult* warm = nullptr;
  for (double lambda : grid) {
    path.fits.push_back(fit_genlasso_at(data, d, lambda, opts, warm));
    warm = &path.fits.back();
  }
  return path;
}

}  // namespace alo

#include "alo/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "alo/error.hpp"

namespace alo {

Eigen::MatrixXd spectral_hessian_rotated(const Eigen::VectorXd& sigma, const Eigen::VectorXd& slope,
                                         const Eigen::VectorXd& curv, Index p1, Index p2,
                                         const std::vector<char>* keep) {
  const Index q = std::min(p1, p2);
  if (sigma.size() != q || slope.size() != q || curv.size() != q) {
    throw Error(ErrorKind::invalid_argument, "spectral Hessian: expected min(p1, p2) values");
  }
  const Index dim = p1 * p2;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  auto kept = [&](Index idx) { return keep == nullptr || (*keep)[static_cast<std::size_t>(idx)]; };
  for (Index s = 0; s < p1; ++s) {
    for (Index t = 0; t < p2; ++t) {
      const Index idx = s * p2 + t;
      if (!kept(idx)) continue;
      if (s == t) {
        h(idx, idx) = curv(s);
      } else if (s < q && t < q) {
        // 2x2 block coupling (s, t) with (t, s).
        const double d = sigma(s) * sigma(s) - sigma(t) * sigma(t);
        const double a = (sigma(s) * slope(s) - sigma(t) * slope(t)) / d;
        const double b = -(sigma(s) * slope(t) - sigma(t) * slope(s)) / d;
        h(idx, idx) = a;
        const Index mirror = t * p2 + s;
        if (kept(mirror)) h(idx, mirror) = b;
      } else {
        // Rectangular part: only one of (s, t), (t, s) exists.
        const Index r = s < q ? s : t;
        h(idx, idx) = slope(r) / sigma(r);
      }
    }
  }
  return h;
}

Eigen::MatrixXd rotation_basis(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  const Index p1 = u.rows();
  const Index p2 = v.rows();
  Eigen::MatrixXd q(p1 * p2, u.cols() * v.cols());
  for (Index s = 0; s < u.cols(); ++s) {
    for (Index t = 0; t < v.cols(); ++t) {
      const Index col = s * v.cols() + t;
      for (Index k = 0; k < p1; ++k) {
        for (Index l = 0; l < p2; ++l) q(k * p2 + l, col) = u(k, s) * v(l, t);
      }
    }
  }
  return q;
}

SpectralHessian spectral_hessian(const SpectralFactorization& f, const ScalarFunction& r,
                                 double separation_tol) {
  const Index p1 = f.U.rows();
  const Index p2 = f.V.rows();
  const Index q = f.sigma.size();
  const double smax = q > 0 ? f.sigma.maxCoeff() : 0.0;
  for (Index t = 0; t < q; ++t) {
    if (!(f.sigma(t) > separation_tol * smax)) {
      throw Error(ErrorKind::degenerate_spectrum, "zero singular value at index " + std::to_string(t));
    }
    for (Index s = 0; s < t; ++s) {
      if (std::abs(f.sigma(s) - f.sigma(t)) <= separation_tol * smax) {
        throw Error(ErrorKind::degenerate_spectrum, "repeated singular values at indices " +
                                                        std::to_string(s) + " and " + std::to_string(t));
      }
    }
  }
  Eigen::VectorXd slope(q);
  Eigen::VectorXd curv(q);
  for (Index t = 0; t < q; ++t) {
    slope(t) = r.d1(f.sigma(t));
    curv(t) = r.d2(f.sigma(t));
  }
  SpectralHessian out;
  out.rotated = spectral_hessian_rotated(f.sigma, slope, curv, p1, p2);
  const Eigen::MatrixXd basis = rotation_basis(f.U, f.V);
  out.standard = basis * out.rotated * basis.transpose();
  return out;
}

}  // namespace alo

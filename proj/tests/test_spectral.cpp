#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "alo/error.hpp"
#include "alo/oracle.hpp"
#include "alo/spectral.hpp"

using namespace alo;

namespace {

// A smooth convex spectral function with nonzero third derivative.
ScalarFunction quartic_plus_square() {
  ScalarFunction f;
  f.value = [](double x) { return x * x * x * x / 16.0 + 0.5 * x * x; };
  f.d1 = [](double x) { return 0.25 * x * x * x + x; };
  f.d2 = [](double x) { return 0.75 * x * x + 1.0; };
  return f;
}

double spectral_sum(const ScalarFunction& r, const Eigen::MatrixXd& b) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  double s = 0.0;
  for (Index t = 0; t < svd.singularValues().size(); ++t) s += r.value(svd.singularValues()(t));
  return s;
}

Eigen::MatrixXd random_orthogonal(Index m, std::mt19937_64& g) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(ref::gaussian(m, m, g));
  return qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
}

Eigen::MatrixXd fd_hessian(const ScalarFunction& r, const Eigen::MatrixXd& b) {
  const Index p1 = b.rows();
  const Index p2 = b.cols();
  return fd::hessian([&](const Eigen::VectorXd& v) { return spectral_sum(r, unflatten(v, p1, p2)); },
                     flatten(b), 1e-4);
}

}  // namespace

TEST_CASE("half squared norm has identity Hessian") {
  std::mt19937_64 g(1);
  const Eigen::MatrixXd b = ref::gaussian(3, 2, g);
  const SpectralFactorization f = spectral_factorization(b, 1e-12);
  const SpectralHessian h = spectral_hessian(f, half_square_function());
  CHECK((h.standard - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((h.rotated - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("off-diagonal block for a two by two spectrum") {
  const Eigen::Vector2d sigma(2.0, 1.0);
  const ScalarFunction r = half_square_function();
  const Eigen::Vector2d slope(r.d1(2.0), r.d1(1.0));
  const Eigen::Vector2d curv(1.0, 1.0);
  const Eigen::MatrixXd h = spectral_hessian_rotated(sigma, slope, curv, 2, 2);
  // indices (0,1) -> 1 and (1,0) -> 2
  CHECK(h(1, 1) == doctest::Approx(1.0));
  CHECK(h(2, 2) == doctest::Approx(1.0));
  CHECK(h(1, 2) == doctest::Approx(0.0));
  CHECK(h(2, 1) == doctest::Approx(0.0));
}

TEST_CASE("spectral Hessian matches finite differences at sigma = (2, 1)") {
  std::mt19937_64 g(2);
  const Eigen::MatrixXd u = random_orthogonal(2, g);
  const Eigen::MatrixXd v = random_orthogonal(2, g);
  const Eigen::MatrixXd b = u * Eigen::Vector2d(2.0, 1.0).asDiagonal() * v.transpose();
  const ScalarFunction r = quartic_plus_square();
  const SpectralHessian h = spectral_hessian(spectral_factorization(b, 1e-12), r);
  CHECK((h.standard - fd_hessian(r, b)).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("spectral Hessian matches finite differences on random separated spectra") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> gap(0.3, 1.0);
  const ScalarFunction r = quartic_plus_square();
  for (int t = 0; t < 50; ++t) {
    const Index p1 = 2 + t % 2;
    const Index p2 = 2 + (t / 2) % 2;
    const Index m = std::min(p1, p2);
    Eigen::VectorXd sigma(m);
    double s = 0.0;
    for (Index k = m - 1; k >= 0; --k) sigma(k) = (s += gap(g));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(p1, p2);
    for (Index k = 0; k < m; ++k) d(k, k) = sigma(k);
    const Eigen::MatrixXd b = random_orthogonal(p1, g) * d * random_orthogonal(p2, g).transpose();
    const SpectralHessian h = spectral_hessian(spectral_factorization(b, 1e-12), r);
    const Eigen::MatrixXd ref_h = fd_hessian(r, b);
    CHECK((h.standard - ref_h).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, ref_h.cwiseAbs().maxCoeff()));
    CHECK((h.standard - h.standard.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h.standard).eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("rotation basis columns are orthonormal and row-major") {
  std::mt19937_64 g(4);
  const Eigen::MatrixXd u = random_orthogonal(2, g);
  const Eigen::MatrixXd v = random_orthogonal(3, g);
  const Eigen::MatrixXd q = rotation_basis(u, v);
  CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd expect = u.col(1) * v.col(2).transpose();
  CHECK((q.col(1 * 3 + 2) - flatten(expect)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("repeated or zero singular values are refused") {
  const ScalarFunction r = quartic_plus_square();
  for (const Eigen::Vector2d& s : {Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.5, 0.0)}) {
    const Eigen::MatrixXd b = s.asDiagonal();
    try {
      spectral_hessian(spectral_factorization(b, 1e-12), r);
      FAIL("expected a degenerate spectrum");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate_spectrum);
    }
  }
}

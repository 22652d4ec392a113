#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "alo/error.hpp"
#include "alo/model_core.hpp"
#include "alo/smoothing.hpp"

using namespace alo;

TEST_CASE("loss values and derivatives at hand-checked points") {
  CHECK(loss_value(LossKind::squared, 3.0, 1.0) == doctest::Approx(2.0));
  CHECK(loss_value(LossKind::hinge, 2.0, 1.0) == doctest::Approx(0.0));
  CHECK(loss_value(LossKind::logistic, 0.0, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(loss_deriv(LossKind::squared, 3.0, 1.0, 1) == doctest::Approx(2.0));
  CHECK(loss_deriv(LossKind::hinge, 0.0, 1.0, 1) == doctest::Approx(-1.0));
  CHECK(loss_deriv(LossKind::logistic, 0.0, 1.0, 1) == doctest::Approx(-0.5));
}

TEST_CASE("hinge rejects bad labels and its kink") {
  CHECK_THROWS_AS(loss_value(LossKind::hinge, 0.0, 0.5), Error);
  try {
    loss_deriv(LossKind::hinge, 1.0, 1.0, 1);
    FAIL("expected a singular point");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular_point);
  }
  CHECK(is_kink(LossKind::hinge, -1.0, -1.0));
  CHECK_FALSE(is_kink(LossKind::logistic, 1.0, 1.0));
}

TEST_CASE("loss derivatives match central differences") {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (LossKind kind : {LossKind::squared, LossKind::logistic, LossKind::hinge}) {
    for (int t = 0; t < 200; ++t) {
      const double y = kind == LossKind::squared ? u(g) : (t % 2 ? 1.0 : -1.0);
      const double x = u(g);
      if (kind == LossKind::hinge && std::abs(1.0 - y * x) < 1e-3) continue;
      const double h = 1e-5;
      const double d1 = ref::central_diff([&](double v) { return loss_value(kind, v, y); }, x, h);
      const double d2 = ref::central_diff([&](double v) { return loss_deriv(kind, v, y, 1); }, x, h);
      CHECK(loss_deriv(kind, x, y, 1) == doctest::Approx(d1).epsilon(1e-4).scale(1.0));
      CHECK(loss_deriv(kind, x, y, 2) == doctest::Approx(d2).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("conjugates at hand-checked points") {
  CHECK(conj_loss_value(LossKind::squared, 0.0, 1.0) == doctest::Approx(0.0));
  CHECK(conj_loss_value(LossKind::hinge, -0.5, 1.0) == doctest::Approx(-0.5));
  CHECK(conj_loss_value(LossKind::logistic, -0.5, 1.0) == doctest::Approx(-std::log(2.0)));
  try {
    conj_loss_value(LossKind::hinge, 0.5, 1.0);
    FAIL("expected an infeasible dual point");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible_dual);
  }
}

TEST_CASE("conjugate values agree with a brute-force supremum") {
  // s on a grid inside each domain; the sup is over u, concave in u.
  for (LossKind kind : {LossKind::squared, LossKind::logistic, LossKind::hinge}) {
    for (double y : {-1.0, 1.0}) {
      for (int k = 1; k < 20; ++k) {
        const double frac = k / 20.0;
        const double s = kind == LossKind::squared ? -3.0 + 6.0 * frac : -y * frac;
        auto obj = [&](double u) { return s * u - loss_value(kind, u, y); };
        double sup = 0.0;
        if (kind == LossKind::hinge) {
          // piecewise linear: the sup is at the kink or at a flat end
          sup = std::max(ref::grid_sup(obj, -50.0, 50.0, 200000), obj(y));
        } else {
          sup = ref::concave_sup(obj, -60.0, 60.0);
        }
        CHECK(std::abs(conj_loss_value(kind, s, y) - sup) < 1e-6);
      }
    }
  }
}

TEST_CASE("reciprocal second derivatives of a loss and its conjugate") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (LossKind kind : {LossKind::squared, LossKind::logistic}) {
    for (int t = 0; t < 100; ++t) {
      const double y = kind == LossKind::squared ? u(g) : (t % 2 ? 1.0 : -1.0);
      const double x = u(g);
      const double s = loss_deriv(kind, x, y, 1);
      const double lhs = conj_loss_deriv(kind, s, y, 2);
      const double rhs = 1.0 / loss_deriv(kind, x, y, 2);
      CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("conjugate first derivative inverts the loss derivative") {
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    const double s = loss_deriv(LossKind::logistic, x, 1.0, 1);
    CHECK(conj_loss_deriv(LossKind::logistic, s, 1.0, 1) == doctest::Approx(x).epsilon(1e-8));
  }
}

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

TEST_CASE("prox examples") {
  const auto r = RegularizerSpec::l1(1.0);
  CHECK(prox(r, vec1(2.0), 1.0)(0) == doctest::Approx(1.0));
  CHECK(prox(r, vec1(0.5), 1.0)(0) == doctest::Approx(0.0));
  CHECK(prox(r, vec1(-3.0), 1.0)(0) == doctest::Approx(-2.0));
  const auto ridge = RegularizerSpec::ridge(1.0);
  CHECK(prox(ridge, vec1(4.0), 1.0)(0) == doctest::Approx(2.0));
  Eigen::MatrixXd d(1, 2);
  d << 1, -1;
  try {
    prox(RegularizerSpec::generalized_l1(d, 1.0), Eigen::VectorXd(Eigen::VectorXd::Ones(2)), 1.0);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported);
  }
}

TEST_CASE("prox is non-expansive for every regularizer") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> lam(0.1, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const double l = lam(g);
    const Eigen::VectorXd a = ref::gaussian_vec(6, g, 2.0);
    const Eigen::VectorXd b = ref::gaussian_vec(6, g, 2.0);
    for (const auto& r : {RegularizerSpec::l1(l), RegularizerSpec::ridge(l)}) {
      CHECK((prox(r, a, 0.7) - prox(r, b, 0.7)).norm() <= (a - b).norm() + 1e-12);
    }
    const Eigen::MatrixXd am = ref::gaussian(3, 4, g);
    const Eigen::MatrixXd bm = ref::gaussian(3, 4, g);
    const auto nuc = RegularizerSpec::nuclear(l);
    CHECK((prox(nuc, am, 0.7) - prox(nuc, bm, 0.7)).norm() <= (am - bm).norm() + 1e-12);
  }
}

TEST_CASE("prox minimizes its defining objective") {
  std::mt19937_64 g(8);
  const Eigen::VectorXd v = ref::gaussian_vec(5, g, 2.0);
  const auto r = RegularizerSpec::l1(0.8);
  const Eigen::VectorXd w = prox(r, v, 1.3);
  auto obj = [&](const Eigen::VectorXd& z) { return 0.5 * (z - v).squaredNorm() + 1.3 * reg_value(r, z); };
  for (int t = 0; t < 200; ++t) {
    CHECK(obj(w) <= obj(w + 0.05 * ref::gaussian_vec(5, g)) + 1e-12);
  }
  const Eigen::MatrixXd m = ref::gaussian(3, 3, g);
  const Eigen::MatrixXd s = singular_value_threshold(m, 0.5);
  CHECK((s - ref::svt(m, 0.5)).norm() < 1e-10);
  CHECK(nuclear_norm(m) == doctest::Approx(ref::nuclear_norm(m)));
}

TEST_CASE("generalized l1 with the identity matches l1") {
  std::mt19937_64 g(2);
  const Eigen::VectorXd b = ref::gaussian_vec(7, g);
  const auto l1 = RegularizerSpec::l1(1.7);
  const auto gen = l1.as_generalized(7);
  CHECK(gen.kind == RegKind::generalized_l1);
  CHECK(reg_value(gen, b) == doctest::Approx(reg_value(l1, b)));
  CHECK(reg_value(RegularizerSpec::ridge(2.0), b) == doctest::Approx(b.squaredNorm()));
}

TEST_CASE("kernel is a normalized symmetric density") {
  for (KernelKind k : {KernelKind::biweight, KernelKind::triweight}) {
    SmoothingKernel ker;
    ker.kind = k;
    const auto& gl = gauss_legendre(32);
    double mass = 0.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) mass += gl.weights[q] * ker.density(gl.nodes[q]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ker.density(0.3) == doctest::Approx(ker.density(-0.3)));
    CHECK(ker.density(0.0) > 0.0);
    CHECK(ker.density(1.2) == 0.0);
  }
}

TEST_CASE("smoothing the absolute value") {
  const ScalarFunction f = abs_function();
  double prev = 1e300;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    SmoothingKernel ker;
    ker.bandwidth = h;
    const SmoothedValue s = smooth_scalar(f, ker, 0.0);
    CHECK(s.d1 == doctest::Approx(0.0));
    CHECK(s.value >= 0.0);
    CHECK(s.value < prev);
    prev = s.value;
    // kink curvature: phi(0) * (jump of f') / h
    CHECK(s.d2 * h == doctest::Approx(15.0 / 16.0 * 2.0).epsilon(1e-10));
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("smoothed functions upper-bound the original and differentiate consistently") {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  SmoothingKernel ker;
  ker.bandwidth = 0.3;
  for (const ScalarFunction& f : {abs_function(), hinge_function(1.0), hinge_function(-1.0)}) {
    for (int t = 0; t < 50; ++t) {
      const double x = u(g);
      const SmoothedValue s = smooth_scalar(f, ker, x);
      CHECK(s.value >= f.value(x) - 1e-12);
      const double d1 = ref::central_diff([&](double v) { return smooth_scalar(f, ker, v).value; }, x, 1e-5);
      const double d2 = ref::central_diff([&](double v) { return smooth_scalar(f, ker, v).d1; }, x, 1e-5);
      CHECK(s.d1 == doctest::Approx(d1).epsilon(1e-4).scale(1.0));
      CHECK(s.d2 == doctest::Approx(d2).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("smoothing a quadratic keeps its curvature") {
  SmoothingKernel ker;
  ker.bandwidth = 1e-3;
  const SmoothedValue s = smooth_scalar(half_square_function(), ker, 1.0);
  CHECK(std::abs(s.d2 - 1.0) < 1e-6);
  CHECK(s.d1 == doctest::Approx(1.0));
}

TEST_CASE("parsers reject unknown names") {
  CHECK(parse_loss("hinge") == LossKind::hinge);
  CHECK(parse_regularizer("fused") == RegKind::generalized_l1);
  CHECK(parse_kernel("quartic") == KernelKind::biweight);
  CHECK_THROWS_AS(parse_loss("huber"), Error);
  CHECK_THROWS_AS(parse_regularizer("slope"), Error);
}

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "alo/alo_primal.hpp"
#include "alo/error.hpp"
#include "alo/oracle.hpp"

using namespace alo;

namespace {

Eigen::VectorXd loo_values(const Predictions& p) {
  Eigen::VectorXd v(static_cast<Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) v(static_cast<Index>(i)) = p[i].y_loo;
  return v;
}

Dataset lasso_data(Index n, Index p, Index k, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  Dataset d;
  d.X = ref::gaussian(n, p, g);
  d.y = d.X * ref::sparse_signal(p, k, g) + 0.5 * ref::gaussian_vec(n, g);
  return d;
}

ModelSpec lasso_model(std::vector<double> grid) {
  ModelSpec m;
  m.loss = LossKind::squared;
  m.reg = RegKind::l1;
  m.lambdas = std::move(grid);
  return m;
}

}  // namespace

TEST_CASE("ridge LOOCV equals the closed-form hat identity") {
  std::mt19937_64 g(1);
  Dataset d{ref::gaussian(25, 10, g), ref::gaussian_vec(25, g)};
  ModelSpec m;
  m.loss = LossKind::squared;
  m.reg = RegKind::ridge;
  m.lambdas = {10.0, 1.0, 0.1};
  const OracleCurve oc = exact_loocv(m, d);
  REQUIRE(oc.predictions.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const Eigen::VectorXd hat = ref::ridge_loo_hat(d.X, d.y, m.lambdas[k]);
    CHECK((loo_values(oc.predictions[k]) - hat).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(oc.loocv_risk[k] == doctest::Approx((hat - d.y).squaredNorm() / 25.0).epsilon(1e-10));
    CHECK(oc.n_failed[k] == 0);
    CHECK(oc.seconds[k] >= 0.0);
  }
}

TEST_CASE("two observations and a huge penalty predict zero") {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 2.0, -0.5, 1.0;
  Dataset d{x, Eigen::Vector2d(1.0, -2.0)};
  const OracleCurve oc = exact_loocv(lasso_model({1e6}), d);
  CHECK(oc.predictions[0][0].y_loo == 0.0);
  CHECK(oc.predictions[0][1].y_loo == 0.0);
}

TEST_CASE("LOOCV risk does not depend on observation order") {
  const Dataset d = lasso_data(30, 20, 4, 2);
  const double lmax = (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const ModelSpec m = lasso_model(log_grid(0.5 * lmax, 0.05 * lmax, 4));
  std::vector<Index> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 g(3);
  std::shuffle(perm.begin(), perm.end(), g);
  const Dataset shuffled = d.rows(perm);
  const OracleCurve a = exact_loocv(m, d);
  const OracleCurve b = exact_loocv(m, shuffled);
  for (std::size_t k = 0; k < m.lambdas.size(); ++k) {
    CHECK(a.loocv_risk[k] == doctest::Approx(b.loocv_risk[k]).epsilon(1e-9));
    for (Index i = 0; i < 30; ++i) {
      CHECK(std::abs(b.predictions[k][static_cast<std::size_t>(i)].y_loo -
                     a.predictions[k][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].y_loo) < 1e-8);
    }
  }
}

TEST_CASE("threads do not change LOOCV") {
  const Dataset d = lasso_data(24, 12, 3, 4);
  const ModelSpec m = lasso_model({5.0, 1.0, 0.2});
  OracleOptions two;
  two.threads = 2;
  const OracleCurve a = exact_loocv(m, d);
  const OracleCurve b = exact_loocv(m, d, two);
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.loocv_risk[k] == b.loocv_risk[k]);
}

TEST_CASE("the refit budget is enforced") {
  const Dataset d = lasso_data(20, 5, 2, 5);
  OracleOptions o;
  o.max_refits = 39;
  try {
    exact_loocv(lasso_model({1.0, 0.5}), d, o);
    FAIL("expected the budget to be exceeded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::budget_exceeded);
  }
  o.max_refits = 40;
  CHECK_NOTHROW(exact_loocv(lasso_model({1.0, 0.5}), d, o));
}

TEST_CASE("n-fold CV is LOOCV") {
  const Dataset d = lasso_data(20, 8, 3, 6);
  const ModelSpec m = lasso_model({8.0, 2.0, 0.5});
  const OracleCurve oc = exact_loocv(m, d);
  const std::vector<double> kf = kfold_cv(m, d, 20, 99, ErrorFn::squared);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(kf[k] - oc.loocv_risk[k]) < 1e-8);
}

TEST_CASE("fold assignment is seeded and balanced") {
  const auto a = kfold_assignment(23, 5, 7);
  const auto b = kfold_assignment(23, 5, 7);
  const auto c = kfold_assignment(23, 5, 8);
  CHECK(a == b);
  CHECK(a != c);
  std::vector<int> sizes(5, 0);
  for (int f : a) ++sizes[static_cast<std::size_t>(f)];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  const Dataset d = lasso_data(23, 6, 2, 7);
  const ModelSpec m = lasso_model({3.0, 0.3});
  const auto r1 = kfold_cv(m, d, 5, 7, ErrorFn::squared);
  const auto r2 = kfold_cv(m, d, 5, 7, ErrorFn::squared);
  CHECK(r1 == r2);
  CHECK_THROWS_AS(kfold_cv(m, d, 1, 7, ErrorFn::squared), Error);
  CHECK_THROWS_AS(kfold_cv(m, d, 24, 7, ErrorFn::squared), Error);
}

TEST_CASE("five-fold CV overestimates risk where LOOCV is smallest") {
  // ridge with p close to n: dropping a fifth of the data hurts much more than dropping one point
  std::mt19937_64 g(8);
  const Index n = 200;
  const Index p = 160;
  Dataset d{ref::gaussian(n, p, g), Eigen::VectorXd()};
  d.y = d.X * ref::gaussian_vec(p, g, 1.0 / std::sqrt(static_cast<double>(p)) * 3.0) +
        ref::gaussian_vec(n, g);
  ModelSpec m;
  m.loss = LossKind::squared;
  m.reg = RegKind::ridge;
  m.lambdas = log_grid(1000.0, 1.0, 12);
  const OracleCurve oc = exact_loocv(m, d);
  const auto kf = kfold_cv(m, d, 5, 1, ErrorFn::squared);
  const auto best = static_cast<std::size_t>(
      std::min_element(oc.loocv_risk.begin(), oc.loocv_risk.end()) - oc.loocv_risk.begin());
  CHECK(kf[best] > oc.loocv_risk[best]);
}

TEST_CASE("smoothed fits approach the nonsmooth fit") {
  const Dataset d = lasso_data(20, 10, 3, 9);
  const double lambda = 0.3 * (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const ModelSpec m = lasso_model({lambda});
  const FitResult exact = fit_lasso_at(d, lambda);
  double prev = 1e300;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    SmoothingKernel ker;
    ker.bandwidth = h;
    const FitResult fh = fit_smoothed(m, d, lambda, ker, &exact);
    CHECK(fh.converged);
    const double dist = (fh.beta - exact.beta).norm();
    CHECK(dist < prev);
    prev = dist;
  }
  SmoothingKernel bad;
  bad.bandwidth = 0.0;
  CHECK_THROWS_AS(fit_smoothed(m, d, lambda, bad), Error);
}

TEST_CASE("lasso ALO is the limit of the smoothed-penalty formula") {
  const Dataset d = lasso_data(40, 20, 4, 10);
  const double lambda = 0.2 * (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const ModelSpec m = lasso_model({lambda});
  const FitResult exact = fit_lasso_at(d, lambda);
  const Eigen::VectorXd limit = loo_values(alo_nonsmooth_reg(exact, d, LossKind::squared, RegularizerSpec::l1(lambda)));
  double prev = 1e300;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    SmoothingKernel ker;
    ker.bandwidth = h;
    const FitResult fh = fit_smoothed(m, d, lambda, ker, &exact);
    const Eigen::VectorXd gap = loo_values(alo_smoothed(m, d, fh, ker)) - limit;
    const double rms = std::sqrt(gap.squaredNorm() / 40.0);
    CHECK(rms < prev);
    prev = rms;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("smoothed hinge slope at the kink is the midpoint") {
  SmoothingKernel ker;
  ker.bandwidth = 1e-3;
  CHECK(smooth_scalar(hinge_function(1.0), ker, 1.0).d1 == doctest::Approx(-0.5));
  CHECK(smooth_scalar(hinge_function(-1.0), ker, -1.0).d1 == doctest::Approx(0.5));
}

TEST_CASE("finite differences") {
  CHECK(std::abs(fd::derivative([](double x) { return x * x; }, 3.0) - 6.0) < 1e-6);
  CHECK(std::abs(fd::derivative([](double x) { return std::sin(x); }, 0.4, 1e-3, true) - std::cos(0.4)) < 1e-10);
  CHECK(std::abs(fd::second_derivative([](double x) { return x * x * x; }, 2.0) - 12.0) < 1e-5);
  const Eigen::MatrixXd j =
      fd::jacobian([](const Eigen::VectorXd& v) { return v; }, Eigen::Vector3d(1.0, -2.0, 0.5));
  CHECK((j - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);
  const Eigen::MatrixXd h = fd::hessian([](const Eigen::VectorXd& v) { return 0.5 * v.squaredNorm(); },
                                        Eigen::VectorXd::LinSpaced(4, -1.0, 2.0));
  CHECK((h - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(fd::derivative([](double x) { return x; }, 1e20, 1e-5), Error);
}

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "alo/error.hpp"
#include "alo/solvers.hpp"

using namespace alo;

namespace {

Dataset lasso_data(Index n, Index p, Index k, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  Dataset d;
  d.X = ref::gaussian(n, p, g);
  d.y = d.X * ref::sparse_signal(p, k, g) + 0.5 * ref::gaussian_vec(n, g);
  return d;
}

Dataset svm_data(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  Dataset d;
  d.X = ref::gaussian(n, p, g);
  d.y = ref::labels_from(d.X * ref::gaussian_vec(p, g, 2.0), g);
  return d;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("lasso on an orthogonal design soft-thresholds") {
  Dataset d{Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(3.0, 0.5)};
  const FitResult f = fit_lasso_at(d, 1.0);
  CHECK(f.converged);
  CHECK(f.beta(0) == doctest::Approx(2.0));
  CHECK(f.beta(1) == doctest::Approx(0.0));
  CHECK(f.active_set == std::vector<Index>{0});
  CHECK(f.theta(0) == doctest::Approx(1.0));
  CHECK(f.theta(1) == doctest::Approx(0.5));
}

TEST_CASE("lasso is null above the threshold") {
  const Dataset d = lasso_data(30, 12, 3, 1);
  const double lmax = (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const FitResult f = fit_lasso_at(d, lmax * 1.0001);
  CHECK(f.beta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.active_set.empty());
}

TEST_CASE("lasso objective matches a proximal-gradient reference") {
  for (std::uint64_t seed : {2, 3, 4}) {
    const Dataset d = lasso_data(20, 10, 4, seed);
    const double lmax = (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
    for (double frac : {0.5, 0.1, 0.01}) {
      const double lambda = frac * lmax;
      const FitResult f = fit_lasso_at(d, lambda);
      const Eigen::VectorXd b = ref::fista_lasso(d.X, d.y, lambda);
      CHECK(f.converged);
      CHECK(rel_gap(ref::lasso_obj(d.X, d.y, lambda, f.beta), ref::lasso_obj(d.X, d.y, lambda, b)) < 1e-8);
      CHECK((d.y - d.X * f.beta - f.theta).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((d.X.transpose() * f.theta).cwiseAbs().maxCoeff() <= lambda * (1.0 + 1e-8));
    }
  }
}

TEST_CASE("lasso handles p > n") {
  const Dataset d = lasso_data(25, 60, 5, 9);
  const double lmax = (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const PathFit path = fit_lasso(d, log_grid(lmax, 0.05 * lmax, 10));
  CHECK(path.all_converged());
  const double lambda = path.lambdas.back();
  const Eigen::VectorXd b = ref::fista_lasso(d.X, d.y, lambda, 200000);
  CHECK(rel_gap(path.fits.back().objective, ref::lasso_obj(d.X, d.y, lambda, b)) < 1e-8);
}

TEST_CASE("warm-started path objectives are consistent") {
  const Dataset d = lasso_data(40, 20, 5, 5);
  const double lmax = (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const PathFit path = fit_lasso(d, log_grid(lmax, 0.01 * lmax, 15));
  for (std::size_t k = 0; k + 1 < path.fits.size(); ++k) {
    const double next = path.lambdas[k + 1];
    CHECK(ref::lasso_obj(d.X, d.y, next, path.fits[k].beta) >= path.fits[k + 1].objective - 1e-9);
  }
}

TEST_CASE("generalized lasso with D = I reproduces the lasso") {
  const Dataset d = lasso_data(30, 8, 3, 6);
  const double lambda = 0.3 * (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  const FitResult g = fit_genlasso_at(d, Eigen::MatrixXd::Identity(8, 8), lambda);
  const FitResult l = fit_lasso_at(d, lambda);
  CHECK(g.converged);
  CHECK((g.beta - l.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fused penalty leaves constant vectors free") {
  const Eigen::MatrixXd dmat = fused_difference_matrix(3);
  CHECK(dmat(0, 0) == 1.0);
  CHECK(dmat(0, 1) == -1.0);
  CHECK(dmat(1, 2) == -1.0);
  Dataset d{Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(2.0, 2.0, 2.0)};
  const FitResult f = fit_genlasso_at(d, dmat, 0.7);
  CHECK(f.converged);
  for (Index i = 0; i < 3; ++i) CHECK(f.beta(i) == doctest::Approx(2.0).epsilon(1e-9));
  // rows summing to one: X * const = const
  std::mt19937_64 g(1);
  Eigen::MatrixXd x = ref::gaussian(6, 3, g).cwiseAbs();
  for (Index i = 0; i < 6; ++i) x.row(i) /= x.row(i).sum();
  const FitResult h = fit_genlasso_at(Dataset{x, Eigen::VectorXd::Constant(6, -1.5)}, dmat, 2.0);
  CHECK((h.beta.array() + 1.5).abs().maxCoeff() < 1e-8);
}

TEST_CASE("fused lasso matches an ADMM reference and keeps its dual feasible") {
  std::mt19937_64 g(7);
  Dataset d;
  d.X = ref::gaussian(50, 20, g);
  Eigen::VectorXd beta(20);
  for (Index j = 0; j < 20; ++j) beta(j) = j < 7 ? 1.0 : (j < 13 ? -0.5 : 2.0);
  d.y = d.X * beta + 0.5 * ref::gaussian_vec(50, g);
  const Eigen::MatrixXd dm = fused_difference_matrix(20);
  const PathFit path = fit_genlasso(d, dm, log_grid(40.0, 0.4, 8));
  CHECK(path.all_converged());
  for (const FitResult& f : path.fits) {
    const Eigen::VectorXd b = ref::admm_genlasso(d.X, d.y, dm, f.lambda);
    CHECK(ref::genlasso_obj(d.X, d.y, dm, f.lambda, f.beta) <=
          ref::genlasso_obj(d.X, d.y, dm, f.lambda, b) + 1e-7);
    CHECK(f.u.cwiseAbs().maxCoeff() <= f.lambda * (1.0 + 1e-10));
    CHECK((d.X.transpose() * f.theta - dm.transpose() * f.u).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((d.y - d.X * f.beta - f.theta).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fused lasso with more features than observations") {
  std::mt19937_64 g(17);
  Dataset d;
  d.X = ref::gaussian(30, 60, g);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(60);
  beta.segment(20, 20).setConstant(1.5);
  d.y = d.X * beta + 0.5 * ref::gaussian_vec(30, g);
  const Eigen::MatrixXd dm = fused_difference_matrix(60);
  const FitResult f = fit_genlasso_at(d, dm, 3.0);
  CHECK(f.converged);
  const Eigen::VectorXd b = ref::admm_genlasso(d.X, d.y, dm, 3.0);
  CHECK(ref::genlasso_obj(d.X, d.y, dm, 3.0, f.beta) <= ref::genlasso_obj(d.X, d.y, dm, 3.0, b) + 1e-7);
}

TEST_CASE("svm on two separable points keeps both on the margin") {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.5, -1.0, -0.2;
  Dataset d{x, Eigen::Vector2d(1.0, -1.0)};
  const FitResult f = fit_svm_at(d, 1e-3);
  CHECK(f.converged);
  CHECK_FALSE(f.active_set.empty());
  const Eigen::VectorXd m = (d.y.array() * (x * f.beta).array()).matrix();
  CHECK(m.minCoeff() >= 1.0 - 1e-5);
}

TEST_CASE("svm with a dominant penalty shrinks to zero") {
  const Dataset d = svm_data(40, 5, 3);
  const FitResult f = fit_svm_at(d, 1e6);
  CHECK(f.beta.norm() < 1e-3);
  const Eigen::VectorXd m = (d.y.array() * (d.X * f.beta).array()).matrix();
  CHECK(m.maxCoeff() < 1.0);
  CHECK(f.theta.cwiseAbs().minCoeff() == doctest::Approx(1.0));
}

TEST_CASE("svm objective matches a dual projected-gradient reference") {
  for (std::uint64_t seed : {1, 2}) {
    const Dataset d = svm_data(60, 10, seed);
    for (double lambda : {10.0, 1.0, 0.1}) {
      const FitResult f = fit_svm_at(d, lambda);
      CHECK(f.converged);
      const Eigen::VectorXd b = ref::svm_dual_pg(d.X, d.y, lambda);
      const double ours = ref::svm_obj(d.X, d.y, lambda, f.beta);
      const double theirs = ref::svm_obj(d.X, d.y, lambda, b);
      CHECK(ours <= theirs * (1.0 + 1e-4));
      CHECK(std::abs(ours - theirs) <= 1e-4 * theirs);
      // -theta_j / y_j in the hinge subdifferential: 1 inside the margin, 0 outside
      const Eigen::VectorXd m = (d.y.array() * (d.X * f.beta).array()).matrix();
      for (Index j = 0; j < m.size(); ++j) {
        const double a = f.theta(j) * d.y(j);
        CHECK(a >= -1e-12);
        CHECK(a <= 1.0 + 1e-12);
        if (m(j) < 1.0 - 1e-5) CHECK(a == doctest::Approx(1.0));
        if (m(j) > 1.0 + 1e-5) CHECK(a == doctest::Approx(0.0));
      }
      CHECK((lambda * f.beta - d.X.transpose() * f.theta).norm() < 1e-8 * std::max(1.0, lambda));
    }
  }
}

TEST_CASE("svm labels are validated") {
  Dataset d{Eigen::MatrixXd::Identity(3, 2), Eigen::Vector3d(1.0, 0.0, -1.0)};
  ModelSpec m;
  m.loss = LossKind::hinge;
  m.reg = RegKind::ridge;
  m.lambdas = {1.0};
  CHECK_THROWS_AS(fit_path(m, d), Error);
}

TEST_CASE("nuclear norm on a single identity observation") {
  MatrixDataset md;
  md.p1 = 2;
  md.p2 = 2;
  md.X = flatten(Eigen::MatrixXd::Identity(2, 2)).transpose();
  md.y = Eigen::VectorXd::Constant(1, 4.0);
  const double lambda = 0.5;
  const FitResult f = fit_nuclear_at(md, lambda);
  CHECK(f.converged);
  // trace is 4 - lambda; starting from zero the iterates stay multiples of I
  CHECK(f.B.trace() == doctest::Approx(4.0 - lambda).epsilon(1e-6));
  CHECK((f.B - 0.5 * (4.0 - lambda) * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-6);
}

TEST_CASE("nuclear norm is null above the spectral threshold") {
  std::mt19937_64 g(2);
  MatrixDataset md;
  md.p1 = 3;
  md.p2 = 4;
  md.X = ref::gaussian(20, 12, g);
  md.y = ref::gaussian_vec(20, g);
  const double lmax = std::sqrt(ref::spectral_norm_sq(ref::unvec_rows(md.X.transpose() * md.y, 3, 4)));
  const FitResult f = fit_nuclear_at(md, lmax * 1.001);
  CHECK(f.B.norm() < 1e-10);
  CHECK(f.spectral->rank == 0);
}

TEST_CASE("nuclear norm objective matches a FISTA reference") {
  std::mt19937_64 g(3);
  MatrixDataset md;
  md.p1 = 5;
  md.p2 = 5;
  const Eigen::MatrixXd truth = ref::gaussian_vec(5, g) * ref::gaussian_vec(5, g).transpose();
  md.X = ref::gaussian(40, 25, g);
  md.y = md.X * ref::vec_rows(truth) + 0.5 * ref::gaussian_vec(40, g);
  const double lmax = std::sqrt(ref::spectral_norm_sq(ref::unvec_rows(md.X.transpose() * md.y, 5, 5)));
  const PathFit path = fit_nuclear(md, log_grid(lmax, 0.05 * lmax, 6));
  CHECK(path.all_converged());
  for (const FitResult& f : path.fits) {
    const Eigen::MatrixXd b = ref::fista_nuclear(md.X, md.y, 5, 5, f.lambda, 20000);
    CHECK(ref::nuclear_obj(md.X, md.y, 5, 5, f.lambda, f.B) <=
          ref::nuclear_obj(md.X, md.y, 5, 5, f.lambda, b) + 1e-6);
    const SpectralFactorization& s = *f.spectral;
    CHECK((s.U.transpose() * s.U - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-10);
    CHECK((s.V.transpose() * s.V - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-10);
    CHECK((s.reconstruct() - f.B).norm() <= 1e-8 * std::max(1e-300, s.sigma(0)) + 1e-14);
    for (Index t = 1; t < s.sigma.size(); ++t) CHECK(s.sigma(t) <= s.sigma(t - 1));
  }
}

TEST_CASE("ridge satisfies its normal equations") {
  const Dataset d = lasso_data(30, 40, 5, 8);
  for (double lambda : {0.1, 1.0, 10.0}) {
    const FitResult f = fit_smooth_at(d, LossKind::squared, RegKind::ridge, lambda);
    Eigen::MatrixXd m = d.X.transpose() * d.X;
    m.diagonal().array() += lambda;
    CHECK((m * f.beta - d.X.transpose() * d.y).norm() < 1e-8 * (1.0 + (d.X.transpose() * d.y).norm()));
  }
}

TEST_CASE("logistic l1 is null for huge lambda and matches proximal gradient otherwise") {
  std::mt19937_64 g(12);
  Dataset d;
  d.X = ref::gaussian(30, 10, g);
  d.y = ref::labels_from(d.X * ref::sparse_signal(10, 3, g) * 2.0, g);
  CHECK(fit_smooth_at(d, LossKind::logistic, RegKind::l1, 1e4).beta.norm() == 0.0);
  const double lmax = 0.5 * (d.X.transpose() * d.y).cwiseAbs().maxCoeff();
  for (double frac : {0.5, 0.1}) {
    const FitResult f = fit_smooth_at(d, LossKind::logistic, RegKind::l1, frac * lmax);
    CHECK(f.converged);
    const Eigen::VectorXd b = ref::fista_logistic_l1(d.X, d.y, frac * lmax);
    CHECK((f.beta - b).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("logistic ridge stationarity") {
  std::mt19937_64 g(13);
  Dataset d;
  d.X = ref::gaussian(40, 8, g);
  d.y = ref::labels_from(d.X * ref::gaussian_vec(8, g), g);
  const FitResult f = fit_smooth_at(d, LossKind::logistic, RegKind::ridge, 0.5);
  const Eigen::VectorXd grad = -d.X.transpose() * f.theta + 0.5 * f.beta;
  CHECK(grad.norm() < 1e-8);
}

TEST_CASE("a tiny iteration budget is flagged, not hidden") {
  const Dataset d = svm_data(80, 20, 4);
  SolverOptions o;
  o.max_iter = 1;
  const FitResult f = fit_svm_at(d, 0.01, o);
  CHECK_FALSE(f.converged);
}

TEST_CASE("grids and datasets are validated") {
  const auto grid = log_grid(10.0, 0.1, 3);
  CHECK(grid.size() == 3);
  CHECK(grid[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(log_grid(1.0, 2.0, 3), Error);
  const std::vector<double> bad = {1.0, 1.0};
  CHECK_THROWS_AS(check_grid(bad), Error);
  Dataset one{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)};
  CHECK_THROWS_AS(one.validate(), Error);
  Dataset nan{Eigen::MatrixXd::Ones(2, 2), Eigen::Vector2d(1.0, std::nan(""))};
  CHECK_THROWS_AS(nan.validate(), Error);
  const Dataset d = lasso_data(5, 3, 1, 1);
  CHECK(d.without(2).n() == 4);
  CHECK(d.without(2).X.row(2) == d.X.row(3));
}

TEST_CASE("flattening is row-major") {
  Eigen::MatrixXd b(2, 3);
  b << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd v = flatten(b);
  CHECK(v(1) == 2.0);
  CHECK(v(3) == 4.0);
  CHECK(unflatten(v, 2, 3) == b);
}

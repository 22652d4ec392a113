#include "alo/datagen.hpp"

#include <cmath>

#include "alo/error.hpp"
#include "alo/rng.hpp"

namespace alo {

namespace {

constexpr std::uint32_t kDesignStream = 1;
constexpr std::uint32_t kCoefStream = 2;
constexpr std::uint32_t kNoiseStream = 3;
constexpr std::uint32_t kLabelStream = 4;

Eigen::MatrixXd gaussian_design(Index n, Index p, double sd, Philox& rng) {
  Eigen::MatrixXd x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < p; ++l) x(i, l) = sd * rng.normal();
  }
  return x;
}

// Rows with covariance scale * rho^{|i-j|}: a stationary AR(1) sequence.
Eigen::MatrixXd ar1_design(Index n, Index p, double rho, double scale, Philox& rng) {
  Eigen::MatrixXd x(n, p);
  const double innov = std::sqrt(1.0 - rho * rho);
  const double s = std::sqrt(scale);
  for (Index i = 0; i < n; ++i) {
    double prev = rng.normal();
    x(i, 0) = s * prev;
    for (Index l = 1; l < p; ++l) {
      prev = rho * prev + innov * rng.normal();
      x(i, l) = s * prev;
    }
  }
  return x;
}

std::vector<std::size_t> sparse_positions(Index p, Index k, Philox& rng) {
  auto perm = random_permutation(static_cast<std::size_t>(p), rng);
  perm.resize(static_cast<std::size_t>(k));
  return perm;
}

double student_t3(Philox& rng) {
  const double z = rng.normal();
  double chi2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double g = rng.normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / 3.0);
}

void need(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::invalid_argument, what);
}

}  // namespace

Scenario parse_scenario(std::string_view name) {
  if (name == "svm-logistic" || name == "svm") return Scenario::svm_logistic;
  if (name == "fused") return Scenario::fused;
  if (name == "lowrank") return Scenario::lowrank;
  if (name == "lasso-misspec") return Scenario::lasso_misspec;
  if (name == "lasso-heavytail") return Scenario::lasso_heavytail;
  if (name == "lasso-correlated") return Scenario::lasso_correlated;
  if (name == "lasso-timing") return Scenario::lasso_timing;
  throw Error(ErrorKind::invalid_argument, "unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::svm_logistic: return "svm-logistic";
    case Scenario::fused: return "fused";
    case Scenario::lowrank: return "lowrank";
    case Scenario::lasso_misspec: return "lasso-misspec";
    case Scenario::lasso_heavytail: return "lasso-heavytail";
    case Scenario::lasso_correlated: return "lasso-correlated";
    case Scenario::lasso_timing: return "lasso-timing";
  }
  return "?";
}

void GenSpec::validate() const {
  need(n >= 2, "n must be at least 2");
  if (scenario == Scenario::lowrank) {
    need(p1 >= 1 && p2 >= 1, "p1 and p2 must be positive");
    need(rank >= 1 && rank <= std::min(p1, p2), "rank must be in [1, min(p1, p2)]");
  } else {
    need(p >= 1, "p must be positive");
  }
  if (scenario == Scenario::fused) need(k >= 1 && k < p, "fused needs 1 <= k < p");
  if (scenario == Scenario::lasso_misspec || scenario == Scenario::lasso_heavytail ||
      scenario == Scenario::lasso_correlated) {
    need(k >= 1 && k <= p, "k must be in [1, p]");
  }
  if (scenario == Scenario::lasso_correlated || scenario == Scenario::lasso_timing) {
    need(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  }
}

double signed_sqrt(double x) { return x >= 0.0 ? std::sqrt(x) : -std::sqrt(-x); }

Eigen::MatrixXd toeplitz_covariance(Index p, double rho) {
  Eigen::MatrixXd c(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) c(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j) + 1));
  }
  return c;
}

Dataset gen_svm(Index n, Index p, std::uint64_t seed, Eigen::VectorXd* beta_out) {
  need(n >= 2 && p >= 1, "gen_svm needs n >= 2 and p >= 1");
  Philox xr(seed, kDesignStream);
  Philox br(seed, kCoefStream);
  Philox lr(seed, kLabelStream);
  Dataset d;
  d.X = gaussian_design(n, p, 1.0, xr);
  Eigen::VectorXd beta(p);
  for (Index l = 0; l < p; ++l) beta(l) = 3.0 * br.normal();
  const Eigen::VectorXd u = d.X * beta;
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-u(i)));
    d.y(i) = lr.uniform() < prob ? 1.0 : -1.0;
  }
  if (beta_out != nullptr) *beta_out = beta;
  return d;
}

Dataset gen_fused(Index n, Index p, Index k, std::uint64_t seed, Eigen::VectorXd* beta_out,
                  double noise_var) {
  need(n >= 2 && k >= 1 && k < p, "gen_fused needs n >= 2 and 1 <= k < p");
  Philox xr(seed, kDesignStream);
  Philox br(seed, kCoefStream);
  Philox nr(seed, kNoiseStream);
  Dataset d;
  d.X = gaussian_design(n, p, std::sqrt(0.05), xr);
  Eigen::VectorXd beta;
  for (;;) {
    Eigen::VectorXd b0 = Eigen::VectorXd::Zero(p);
    for (std::size_t pos : sparse_positions(p, k, br)) b0(static_cast<Index>(pos)) = br.normal();
    beta.resize(p);
    double run = 0.0;
    for (Index l = 0; l < p; ++l) beta(l) = (run += b0(l));
    const double mean = beta.mean();
    const double sd = std::sqrt((beta.array() - mean).square().mean());
    if (sd > 0.0) {
      beta /= sd;
      break;
    }
  }
  d.y = d.X * beta;
  const double s = std::sqrt(noise_var);
  for (Index i = 0; i < n; ++i) d.y(i) += s * nr.normal();
  if (beta_out != nullptr) *beta_out = beta;
  return d;
}

MatrixDataset gen_lowrank(Index n, Index p1, Index p2, Index rank, std::uint64_t seed,
                          Eigen::MatrixXd* b_out, double noise_var) {
  need(n >= 2 && p1 >= 1 && p2 >= 1 && rank >= 1 && rank <= std::min(p1, p2),
       "gen_lowrank needs n >= 2 and 1 <= rank <= min(p1, p2)");
  Philox xr(seed, kDesignStream);
  Philox br(seed, kCoefStream);
  Philox nr(seed, kNoiseStream);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p1, p2);
  for (Index l = 0; l < rank; ++l) {
    Eigen::VectorXd z(p1);
    Eigen::VectorXd w(p2);
    for (Index a = 0; a < p1; ++a) z(a) = br.normal();
    for (Index a = 0; a < p2; ++a) w(a) = br.normal();
    b += z * w.transpose();
  }
  MatrixDataset d;
  d.p1 = p1;
  d.p2 = p2;
  d.X = gaussian_design(n, p1 * p2, 1.0, xr);
  d.y = d.X * flatten(b);
  const double s = std::sqrt(noise_var);
  for (Index i = 0; i < n; ++i) d.y(i) += s * nr.normal();
  if (b_out != nullptr) *b_out = b;
  return d;
}

Dataset gen_lasso_variant(Scenario scenario, Index n, Index p, Index k, double rho,
                          std::uint64_t seed, Eigen::VectorXd* beta_out, double noise_var) {
  need(n >= 2 && p >= 1, "lasso generator needs n >= 2 and p >= 1");
  Philox xr(seed, kDesignStream);
  Philox br(seed, kCoefStream);
  Philox nr(seed, kNoiseStream);
  Dataset d;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  switch (scenario) {
    case Scenario::lasso_misspec:
    case Scenario::lasso_heavytail:
      need(k >= 1 && k <= p, "k must be in [1, p]");
      d.X = gaussian_design(n, p, std::sqrt(1.0 / static_cast<double>(k)), xr);
      break;
    case Scenario::lasso_correlated:
      need(k >= 1 && k <= p, "k must be in [1, p]");
      need(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
      d.X = ar1_design(n, p, rho, rho / static_cast<double>(k), xr);
      break;
    case Scenario::lasso_timing:
      need(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
      d.X = ar1_design(n, p, rho, rho, xr);
      k = std::max<Index>(1, std::min(n, p) / 2);
      break;
    default:
      throw Error(ErrorKind::invalid_argument, "not a lasso scenario");
  }
  for (std::size_t pos : sparse_positions(p, k, br)) {
    beta(static_cast<Index>(pos)) =
        scenario == Scenario::lasso_timing ? (br.uniform() < 0.5 ? 1.0 : -1.0) : br.normal();
  }
  const Eigen::VectorXd signal = d.X * beta;
  d.y.resize(n);
  const double s = std::sqrt(noise_var);
  for (Index i = 0; i < n; ++i) {
    switch (scenario) {
      case Scenario::lasso_misspec: d.y(i) = signed_sqrt(signal(i) + s * nr.normal()); break;
      case Scenario::lasso_heavytail:
        d.y(i) = signal(i) + std::sqrt(noise_var / 3.0) * student_t3(nr);
        break;
      default: d.y(i) = signal(i) + s * nr.normal(); break;
    }
  }
  if (beta_out != nullptr) *beta_out = beta;
  return d;
}

Generated generate(const GenSpec& spec) {
  spec.validate();
  const double noise =
      spec.noise_var >= 0.0 ? spec.noise_var : (spec.scenario == Scenario::lasso_timing ? 0.5 : 0.25);
  Generated g;
  switch (spec.scenario) {
    case Scenario::svm_logistic: g.data = gen_svm(spec.n, spec.p, spec.seed, &g.beta); break;
    case Scenario::fused:
      g.data = gen_fused(spec.n, spec.p, spec.k, spec.seed, &g.beta, noise);
      break;
    case Scenario::lowrank: {
      Eigen::MatrixXd b;
      g.mdata = gen_lowrank(spec.n, spec.p1, spec.p2, spec.rank, spec.seed, &b, noise);
      g.beta = flatten(b);
      g.is_matrix = true;
      break;
    }
    default:
      g.data = gen_lasso_variant(spec.scenario, spec.n, spec.p, spec.k, spec.rho, spec.seed, &g.beta,
                                 noise);
      break;
  }
  return g;
}

}  // namespace alo

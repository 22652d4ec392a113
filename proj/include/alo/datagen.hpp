#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

#include "alo/solvers.hpp"

namespace alo {

enum class Scenario {
  svm_logistic,
  fused,
  lowrank,
  lasso_misspec,
  lasso_heavytail,
  lasso_correlated,
  lasso_timing,
};

Scenario parse_scenario(std::string_view name);
std::string_view to_string(Scenario s);

/// Synthetic data settings. Every generator is a pure function of this spec:
/// the design, coefficients, noise and labels each come from their own
/// Philox stream (ids 1, 2, 3, 4) under `seed`; design entries are drawn row
/// by row.
struct GenSpec {
  Scenario scenario = Scenario::lasso_misspec;
  Index n = 100;
  Index p = 50;
  Index p1 = 20;
  Index p2 = 20;
  Index rank = 1;
  Index k = 5;
  double rho = 0.8;
  double noise_var = -1.0;  // negative: scenario default (0.5 for timing, else 0.25)
  std::uint64_t seed = 1;

  void validate() const;
};

struct Generated {
  bool is_matrix = false;
  Dataset data;
  MatrixDataset mdata;
  Eigen::VectorXd beta;  // true coefficients (row-major vec(B) for matrix data)
};

/// X i.i.d. N(0, 1), beta i.i.d. N(0, 9), P(y = +1) = 1 / (1 + exp(-x^T beta)).
Dataset gen_svm(Index n, Index p, std::uint64_t seed, Eigen::VectorXd* beta = nullptr);

/// X i.i.d. N(0, 0.05); beta = cumulative sum of a k-sparse N(0, 1) vector,
/// rescaled to population standard deviation 1; noise N(0, noise_var).
Dataset gen_fused(Index n, Index p, Index k, std::uint64_t seed, Eigen::VectorXd* beta = nullptr,
                  double noise_var = 0.25);

/// B = sum_l z_l w_l^T with N(0, 1) factors, X_j i.i.d. N(0, 1) entries,
/// y_j = <X_j, B> + N(0, noise_var).
MatrixDataset gen_lowrank(Index n, Index p1, Index p2, Index rank, std::uint64_t seed,
                          Eigen::MatrixXd* b = nullptr, double noise_var = 0.25);

/// Lasso settings with k nonzero N(0, 1) coefficients:
///  misspec:    X i.i.d. N(0, 1/k), y = f(x^T beta + eps), f(x) = sign(x) sqrt|x|
///  heavytail:  X i.i.d. N(0, 1/k), y = x^T beta + t_3 noise scaled to variance noise_var
///  correlated: rows N(0, C / k) with C_ij = rho^{|i-j|+1}, y = x^T beta + N(0, noise_var)
///  timing:     rows N(0, C), min(n, p) / 2 nonzeros equal to +-1, noise N(0, noise_var)
Dataset gen_lasso_variant(Scenario scenario, Index n, Index p, Index k, double rho,
                          std::uint64_t seed, Eigen::VectorXd* beta = nullptr,
                          double noise_var = 0.25);

Generated generate(const GenSpec& spec);

/// f(x) = sign(x) sqrt(|x|).
double signed_sqrt(double x);

/// Toeplitz covariance with entries rho^{|i-j|+1}.
Eigen::MatrixXd toeplitz_covariance(Index p, double rho);

}  // namespace alo

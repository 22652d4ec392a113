#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace alo {

enum class LossKind { squared, logistic, hinge };

/// Squared: (u - y)^2 / 2.  Logistic: log(1 + exp(-y u)), y in {-1, +1}.
/// Hinge: (1 - y u)_+, y in {-1, +1}, with a single kink at u = y.
struct LossSpec {
  LossKind kind = LossKind::squared;
};

LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind kind);

/// True if the loss needs labels in {-1, +1}.
bool requires_binary_labels(LossKind kind);
/// True if u is a zero-order singularity of loss(., y).
bool is_kink(LossKind kind, double u, double y);
/// Locations of the zero-order singularities of loss(., y).
Eigen::VectorXd loss_kinks(LossKind kind, double y);

double loss_value(LossKind kind, double u, double y);
/// order 1 or 2. Throws Error{singular_point} at a kink.
double loss_deriv(LossKind kind, double u, double y, int order);

/// Fenchel conjugate loss*(s; y) = sup_u { s u - loss(u; y) }, stored exactly
/// (no additive offset). Throws Error{infeasible_dual} outside its domain.
double conj_loss_value(LossKind kind, double s, double y);
double conj_loss_deriv(LossKind kind, double s, double y, int order);
/// Closed domain of loss*(.; y) as [lo, hi] (infinite ends allowed).
std::pair<double, double> conj_domain(LossKind kind, double y);

enum class RegKind { l1, ridge, generalized_l1, nuclear };

RegKind parse_regularizer(std::string_view name);
std::string_view to_string(RegKind kind);

/// Regularizer lambda * R. Ridge is (lambda / 2) ||b||^2; generalized-l1 is
/// lambda ||D b||_1 with D stored explicitly; nuclear is lambda ||B||_*.
struct RegularizerSpec {
  RegKind kind = RegKind::l1;
  double lambda = 1.0;
  Eigen::MatrixXd D;

  static RegularizerSpec l1(double lambda);
  static RegularizerSpec ridge(double lambda);
  static RegularizerSpec generalized_l1(Eigen::MatrixXd d, double lambda);
  static RegularizerSpec nuclear(double lambda);

  /// l1 as generalized-l1 with D = I_p.
  RegularizerSpec as_generalized(Eigen::Index p) const;
};

double reg_value(const RegularizerSpec& reg, const Eigen::VectorXd& beta);
double nuclear_norm(const Eigen::MatrixXd& b);

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t);
double soft_threshold(double v, double t);
/// Singular value thresholding: prox of t * ||.||_*.
Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& b, double t);

/// argmin_w 1/2 ||w - v||^2 + step * R(w) for l1 and ridge.
/// generalized-l1 has no closed form and throws Error{unsupported}.
Eigen::VectorXd prox(const RegularizerSpec& reg, const Eigen::VectorXd& v, double step);
/// Nuclear-norm prox on matrix input.
Eigen::MatrixXd prox(const RegularizerSpec& reg, const Eigen::MatrixXd& v, double step);

}  // namespace alo

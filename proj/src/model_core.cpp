#include "alo/model_core.hpp"

#include <cmath>
#include <limits>

#include "alo/error.hpp"

namespace alo {

namespace {

constexpr double kDomainSlack = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_label(LossKind kind, double y) {
  if (requires_binary_labels(kind) && y != 1.0 && y != -1.0) {
    throw Error(ErrorKind::invalid_argument,
                std::string(to_string(kind)) + " loss requires labels in {-1, +1}, got " +
                    std::to_string(y));
  }
}

void check_order(int order) {
  if (order != 1 && order != 2) {
    throw Error(ErrorKind::invalid_argument, "derivative order must be 1 or 2");
  }
}

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

}  // namespace

LossKind parse_loss(std::string_view name) {
  if (name == "squared") return LossKind::squared;
  if (name == "logistic") return LossKind::logistic;
  if (name == "hinge") return LossKind::hinge;
  throw Error(ErrorKind::invalid_argument, "unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared: return "squared";
    case LossKind::logistic: return "logistic";
    case LossKind::hinge: return "hinge";
  }
  return "?";
}

bool requires_binary_labels(LossKind kind) { return kind != LossKind::squared; }

bool is_kink(LossKind kind, double u, double y) {
  return kind == LossKind::hinge && y * u == 1.0;
}

Eigen::VectorXd loss_kinks(LossKind kind, double y) {
  if (kind == LossKind::hinge) return Eigen::VectorXd::Constant(1, y);
  return Eigen::VectorXd(0);
}

double loss_value(LossKind kind, double u, double y) {
  check_label(kind, y);
  switch (kind) {
    case LossKind::squared: return 0.5 * (u - y) * (u - y);
    case LossKind::logistic: return softplus(-y * u);
    case LossKind::hinge: return std::max(0.0, 1.0 - y * u);
  }
  return 0.0;
}

double loss_deriv(LossKind kind, double u, double y, int order) {
  check_label(kind, y);
  check_order(order);
  switch (kind) {
    case LossKind::squared: return order == 1 ? u - y : 1.0;
    case LossKind::logistic:
      if (order == 1) return -y * sigmoid(-y * u);
      return sigmoid(y * u) * sigmoid(-y * u);
    case LossKind::hinge:
      if (is_kink(kind, u, y)) {
        throw Error(ErrorKind::singular_point,
                    "hinge loss is not differentiable at y*u = 1 (u = " + std::to_string(u) + ")");
      }
      if (order == 2) return 0.0;
      return y * u < 1.0 ? -y : 0.0;
  }
  return 0.0;
}

std::pair<double, double> conj_domain(LossKind kind, double y) {
  check_label(kind, y);
  switch (kind) {
    case LossKind::squared: return {-kInf, kInf};
    case LossKind::logistic:
    case LossKind::hinge:
      // s * y in [-1, 0]
      return y > 0 ? std::pair{-1.0, 0.0} : std::pair{0.0, 1.0};
  }
  return {-kInf, kInf};
}

namespace {

/// For the binary losses returns q = -s y clamped into [0, 1].
double binary_dual_weight(LossKind kind, double s, double y) {
  const double t = s * y;
  if (t < -1.0 - kDomainSlack || t > kDomainSlack) {
    throw Error(ErrorKind::infeasible_dual, std::string(to_string(kind)) +
                                                " conjugate requires s*y in [-1, 0], got s = " +
                                                std::to_string(s));
  }
  return std::clamp(-t, 0.0, 1.0);
}

}  // namespace

double conj_loss_value(LossKind kind, double s, double y) {
  check_label(kind, y);
  switch (kind) {
    case LossKind::squared: return 0.5 * s * s + s * y;
    case LossKind::logistic: {
      const double q = binary_dual_weight(kind, s, y);
      return xlogx(q) + xlogx(1.0 - q);
    }
    case LossKind::hinge: {
      const double q = binary_dual_weight(kind, s, y);
      return -q;
    }
  }
  return 0.0;
}

double conj_loss_deriv(LossKind kind, double s, double y, int order) {
  check_label(kind, y);
  check_order(order);
  switch (kind) {
    case LossKind::squared: return order == 1 ? s + y : 1.0;
    case LossKind::logistic: {
      const double q = binary_dual_weight(kind, s, y);
      if (q <= 0.0 || q >= 1.0) {
        throw Error(ErrorKind::infeasible_dual,
                    "logistic conjugate is not differentiable on the domain boundary");
      }
      if (order == 1) return y * std::log((1.0 - q) / q);
      return 1.0 / (q * (1.0 - q));
    }
    case LossKind::hinge:
      binary_dual_weight(kind, s, y);
      return order == 1 ? y : 0.0;
  }
  return 0.0;
}

RegKind parse_regularizer(std::string_view name) {
  if (name == "l1" || name == "lasso") return RegKind::l1;
  if (name == "ridge" || name == "l2") return RegKind::ridge;
  if (name == "generalized-l1" || name == "genlasso" || name == "fused") {
    return RegKind::generalized_l1;
  }
  if (name == "nuclear") return RegKind::nuclear;
  throw Error(ErrorKind::invalid_argument, "unknown regularizer '" + std::string(name) + "'");
}

std::string_view to_string(RegKind kind) {
  switch (kind) {
    case RegKind::l1: return "l1";
    case RegKind::ridge: return "ridge";
    case RegKind::generalized_l1: return "generalized-l1";
    case RegKind::nuclear: return "nuclear";
  }
  return "?";
}

namespace {

RegularizerSpec make_reg(RegKind kind, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::invalid_argument, "lambda must be positive and finite");
  }
  RegularizerSpec r;
  r.kind = kind;
  r.lambda = lambda;
  return r;
}

}  // namespace

RegularizerSpec RegularizerSpec::l1(double lambda) { return make_reg(RegKind::l1, lambda); }

RegularizerSpec RegularizerSpec::ridge(double lambda) { return make_reg(RegKind::ridge, lambda); }

RegularizerSpec RegularizerSpec::generalized_l1(Eigen::MatrixXd d, double lambda) {
  auto r = make_reg(RegKind::generalized_l1, lambda);
  r.D = std::move(d);
  return r;
}

RegularizerSpec RegularizerSpec::nuclear(double lambda) {
  return make_reg(RegKind::nuclear, lambda);
}

RegularizerSpec RegularizerSpec::as_generalized(Eigen::Index p) const {
  if (kind == RegKind::generalized_l1) return *this;
  if (kind != RegKind::l1) {
    throw Error(ErrorKind::unsupported, "only l1 can be expressed as generalized-l1");
  }
  return generalized_l1(Eigen::MatrixXd::Identity(p, p), lambda);
}

double nuclear_norm(const Eigen::MatrixXd& b) {
  if (b.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  return svd.singularValues().sum();
}

double reg_value(const RegularizerSpec& reg, const Eigen::VectorXd& beta) {
  switch (reg.kind) {
    case RegKind::l1: return reg.lambda * beta.lpNorm<1>();
    case RegKind::ridge: return 0.5 * reg.lambda * beta.squaredNorm();
    case RegKind::generalized_l1:
      if (reg.D.cols() != beta.size()) {
        throw Error(ErrorKind::invalid_argument, "D column count does not match coefficients");
      }
      return reg.lambda * (reg.D * beta).lpNorm<1>();
    case RegKind::nuclear:
      throw Error(ErrorKind::invalid_argument, "nuclear regularizer needs matrix input");
  }
  return 0.0;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  return v.unaryExpr([t](double x) { return soft_threshold(x, t); });
}

Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& b, double t) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = (svd.singularValues().array() - t).max(0.0).matrix();
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Eigen::VectorXd prox(const RegularizerSpec& reg, const Eigen::VectorXd& v, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::invalid_argument, "prox step must be positive");
  switch (reg.kind) {
    case RegKind::l1: return soft_threshold(v, step * reg.lambda);
    case RegKind::ridge: return v / (1.0 + step * reg.lambda);
    case RegKind::generalized_l1:
      throw Error(ErrorKind::unsupported,
                  "generalized-l1 prox has no closed form; use the dual projection path");
    case RegKind::nuclear:
      throw Error(ErrorKind::invalid_argument, "nuclear prox needs matrix input");
  }
  return v;
}

Eigen::MatrixXd prox(const RegularizerSpec& reg, const Eigen::MatrixXd& v, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::invalid_argument, "prox step must be positive");
  if (reg.kind != RegKind::nuclear) {
    if (v.cols() != 1) {
      throw Error(ErrorKind::invalid_argument, "matrix prox is only defined for nuclear norm");
    }
    return prox(reg, Eigen::VectorXd(v.col(0)), step);
  }
  return singular_value_threshold(v, step * reg.lambda);
}

}  // namespace alo

#include "alo/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "alo/error.hpp"

namespace alo {

KernelKind parse_kernel(std::string_view name) {
  if (name == "biweight" || name == "quartic") return KernelKind::biweight;
  if (name == "triweight") return KernelKind::triweight;
  throw Error(ErrorKind::invalid_argument, "unknown kernel '" + std::string(name) + "'");
}

double SmoothingKernel::density(double w) const {
  if (std::abs(w) >= 1.0) return 0.0;
  const double a = 1.0 - w * w;
  switch (kind) {
    case KernelKind::biweight: return 15.0 / 16.0 * a * a;
    case KernelKind::triweight: return 35.0 / 32.0 * a * a * a;
  }
  return 0.0;
}

ScalarFunction abs_function() {
  ScalarFunction f;
  f.value = [](double x) { return std::abs(x); };
  f.d1 = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
  f.d2 = [](double) { return 0.0; };
  f.kinks = {0.0};
  f.jumps = {2.0};
  return f;
}

ScalarFunction half_square_function() {
  ScalarFunction f;
  f.value = [](double x) { return 0.5 * x * x; };
  f.d1 = [](double x) { return x; };
  f.d2 = [](double) { return 1.0; };
  return f;
}

ScalarFunction hinge_function(double y) {
  if (y != 1.0 && y != -1.0) {
    throw Error(ErrorKind::invalid_argument, "hinge label must be -1 or +1");
  }
  ScalarFunction f;
  f.value = [y](double u) { return std::max(0.0, 1.0 - y * u); };
  f.d1 = [y](double u) { return y * u < 1.0 ? -y : 0.0; };
  f.d2 = [](double) { return 0.0; };
  f.kinks = {y};
  f.jumps = {1.0};
  return f;
}

const GaussLegendre& gauss_legendre(int order) {
  static std::mutex mutex;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  GaussLegendre rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

SmoothedValue smooth_scalar(const ScalarFunction& f, const SmoothingKernel& kernel, double x) {
  const double h = kernel.bandwidth;
  if (!(h > 0.0)) throw Error(ErrorKind::invalid_argument, "bandwidth must be positive");
  const double c = kernel.support();

  // Split [-C, C] in w at every kink so each piece integrates a smooth integrand.
  std::vector<double> breaks{-c, c};
  for (double v : f.kinks) {
    const double w = (x - v) / h;
    if (w > -c && w < c) breaks.push_back(w);
  }
  std::sort(breaks.begin(), breaks.end());

  const auto& rule = gauss_legendre(24);
  SmoothedValue out;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double lo = breaks[b], hi = breaks[b + 1];
    if (hi <= lo) continue;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double w = mid + half * rule.nodes[q];
      const double weight = half * rule.weights[q] * kernel.density(w);
      const double z = x - h * w;
      out.value += weight * f.value(z);
      out.d1 += weight * f.d1(z);
      out.d2 += weight * f.d2(z);
    }
  }
  for (std::size_t k = 0; k < f.kinks.size(); ++k) {
    const double jump = k < f.jumps.size() ? f.jumps[k] : 0.0;
    out.d2 += jump * kernel.density((x - f.kinks[k]) / h) / h;
  }
  return out;
}

}  // namespace alo

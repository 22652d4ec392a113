#pragma once

#include <functional>
#include <string_view>
#include <vector>

namespace alo {

enum class KernelKind { biweight, triweight };

KernelKind parse_kernel(std::string_view name);

/// Symmetric, compactly supported, smooth probability density on [-1, 1]
/// scaled by bandwidth h: phi_h(w) = phi(w / h) / h.
struct SmoothingKernel {
  double bandwidth = 1e-2;
  KernelKind kind = KernelKind::biweight;

  /// Half-width C of the support of the unit kernel.
  double support() const { return 1.0; }
  /// Unit-bandwidth density phi(w).
  double density(double w) const;
};

/// A convex, piecewise twice-differentiable scalar function. `d1` and `d2`
/// are evaluated away from the kinks; `jumps[k]` is d1(kinks[k]+) - d1(kinks[k]-).
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::vector<double> kinks;
  std::vector<double> jumps;
};

ScalarFunction abs_function();
ScalarFunction half_square_function();
/// u -> (1 - y u)_+ for a label y in {-1, +1}.
ScalarFunction hinge_function(double y);

struct SmoothedValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// f_h(x) = integral f(x - h w) phi(w) dw and its first two derivatives.
/// The second derivative includes the kink contributions jump * phi((x - v) / h) / h.
SmoothedValue smooth_scalar(const ScalarFunction& f, const SmoothingKernel& kernel, double x);

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int order);

}  // namespace alo

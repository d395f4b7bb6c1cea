#include "pairdiff/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pairdiff/error.hpp"

namespace pairdiff {

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::kGaussian;
  if (name == "epanechnikov") return KernelFamily::kEpanechnikov;
  if (name == "uniform") return KernelFamily::kUniform;
  throw ConfigError("unknown kernel family '" + std::string(name) +
                    "' (expected gaussian, epanechnikov or uniform)");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kGaussian:
      return "gaussian";
    case KernelFamily::kEpanechnikov:
      return "epanechnikov";
    case KernelFamily::kUniform:
      return "uniform";
  }
  return "unknown";
}

namespace {

void check_dimension(const KernelSpec& spec, Eigen::Index size) {
  if (spec.dim < 1) throw ConfigError("kernel dimension must be positive");
  if (size != spec.dim) {
    throw ConfigError("kernel argument has dimension " + std::to_string(size) + ", kernel expects " +
                      std::to_string(spec.dim));
  }
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& u) {
  check_dimension(spec, u.size());
  if (spec.family == KernelFamily::kGaussian) {
    // Single exponential of the squared norm; equals the product of factors.
    const double norm_const = std::pow(2.0 * std::numbers::pi, -0.5 * spec.dim);
    return norm_const * std::exp(-0.5 * u.squaredNorm());
  }
  double value = 1.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    value *= kernel_factor(spec.family, u[j]);
    if (value == 0.0) break;
  }
  return value;
}

double scaled_kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& u, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth must be positive and finite");
  const Vector scaled = u / h;
  return kernel_eval(spec, scaled) / std::pow(h, spec.dim);
}

double kernel_sup(const KernelSpec& spec) {
  if (spec.dim < 1) throw ConfigError("kernel dimension must be positive");
  return std::pow(kernel_factor(spec.family, 0.0), spec.dim);
}

double kernel_support_radius(KernelFamily family) {
  switch (family) {
    case KernelFamily::kGaussian:
      return std::numeric_limits<double>::infinity();
    case KernelFamily::kEpanechnikov:
      return 1.0;
    case KernelFamily::kUniform:
      return 0.5;
  }
  return 0.0;
}

double kernel_product_integral(const KernelSpec& spec, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("kernel scales must be positive");
  if (spec.dim < 1) throw ConfigError("kernel dimension must be positive");
  double one_dim = 0.0;
  switch (spec.family) {
    case KernelFamily::kGaussian:
      one_dim = 1.0 / std::sqrt(2.0 * std::numbers::pi * (a * a + b * b));
      break;
    case KernelFamily::kUniform:
      one_dim = 1.0 / std::max(a, b);
      break;
    case KernelFamily::kEpanechnikov: {
      const double m = std::min(a, b);
      const double a2 = a * a;
      const double b2 = b * b;
      const double m3 = m * m * m;
      const double m5 = m3 * m * m;
      one_dim = 9.0 / (16.0 * a * b) * 2.0 * (m - m3 / 3.0 * (1.0 / a2 + 1.0 / b2) + m5 / (5.0 * a2 * b2));
      break;
    }
  }
  return std::pow(one_dim, spec.dim);
}

namespace {

void check_equivalent(const EquivalentKernel& ek) {
  if (ek.lambdas.size() != ek.c.size() || ek.c.size() == 0) {
    throw ConfigError("equivalent kernel needs matching nonempty lambda and c vectors (got " +
                      std::to_string(ek.lambdas.size()) + " and " + std::to_string(ek.c.size()) + ")");
  }
  if ((ek.c.array() <= 0.0).any()) throw ConfigError("equivalent kernel scales must be positive");
}

}  // namespace

double equivalent_kernel_eval(const EquivalentKernel& ek, const Eigen::Ref<const Vector>& u) {
  check_equivalent(ek);
  double value = 0.0;
  for (Eigen::Index l = 0; l < ek.c.size(); ++l) value += ek.lambdas[l] * scaled_kernel_eval(ek.base, u, ek.c[l]);
  return value;
}

double equivalent_kernel_roughness(const EquivalentKernel& ek) {
  check_equivalent(ek);
  double total = 0.0;
  for (Eigen::Index l = 0; l < ek.c.size(); ++l) {
    for (Eigen::Index m = 0; m < ek.c.size(); ++m) {
      total += ek.lambdas[l] * ek.lambdas[m] * kernel_product_integral(ek.base, ek.c[l], ek.c[m]);
    }
  }
  return total;
}

EquivalentKernel as_equivalent_kernel(const KernelSpec& spec) {
  return EquivalentKernel{spec, Vector::Ones(1), Vector::Ones(1)};
}

}  // namespace pairdiff

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "pairdiff/types.hpp"

namespace pairdiff {

/// Second-order base kernels. All three are symmetric, bounded probability
/// densities; Epanechnikov and uniform are products of 1-D factors with
/// compact support, the Gaussian has full support.
enum class KernelFamily { kGaussian, kEpanechnikov, kUniform };

KernelFamily parse_kernel_family(std::string_view name);
std::string to_string(KernelFamily family);

struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussian;
  int dim = 1;
};

/// One-dimensional factor of the product kernel.
template <typename Scalar>
Scalar kernel_factor(KernelFamily family, Scalar t) {
  using std::abs;
  using std::exp;
  switch (family) {
    case KernelFamily::kGaussian:
      return exp(Scalar(-0.5) * t * t) * Scalar(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    case KernelFamily::kEpanechnikov:
      return abs(t) <= Scalar(1) ? Scalar(0.75) * (Scalar(1) - t * t) : Scalar(0);
    case KernelFamily::kUniform:
      return abs(t) <= Scalar(0.5) ? Scalar(1) : Scalar(0);
  }
  return Scalar(0);
}

/// K(u). Throws ConfigError when u.size() != spec.dim.
double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& u);

/// K_h(u) = h^{-d} K(u / h). Throws ConfigError for h <= 0.
double scaled_kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& u, double h);

/// sup_u K(u), attained at the origin for every family.
double kernel_sup(const KernelSpec& spec);

/// Half-width of the 1-D support (infinity for the Gaussian).
double kernel_support_radius(KernelFamily family);

/// Closed form of \int K_a(u) K_b(u) du for bandwidth scales a, b > 0.
/// With a == b == 1 this is the roughness \int K^2.
double kernel_product_integral(const KernelSpec& spec, double a, double b);

inline double kernel_roughness(const KernelSpec& spec) { return kernel_product_integral(spec, 1.0, 1.0); }

/// The signed kernel sum_l lambda_l K_{c_l}(u) induced by jackknifing.
struct EquivalentKernel {
  KernelSpec base;
  Vector lambdas;
  Vector c;
};

double equivalent_kernel_eval(const EquivalentKernel& ek, const Eigen::Ref<const Vector>& u);

/// \int Kbar^2 via the closed-form pairwise products of the components.
double equivalent_kernel_roughness(const EquivalentKernel& ek);

/// Wraps a base kernel as the trivial single-term equivalent kernel.
EquivalentKernel as_equivalent_kernel(const KernelSpec& spec);

// ---------------------------------------------------------------------------
// Moment quadrature

/// Tensor-product composite Gauss-Legendre rule. Panel edges always include
/// the kink points of compact components, so piecewise-polynomial kernels are
/// integrated exactly; the error estimate is the change under panel doubling.
struct QuadratureConfig {
  int panels_per_axis = 0;  ///< 0 picks a default from family and dimension
  int nodes_per_panel = 8;
  double radius = 0.0;      ///< truncation radius; 0 means 8 * max(c) or the support hull
  double tolerance = 1e-9;  ///< on error / (1 + \int |u^a Kbar|)
  int max_order = 8;
};

struct MomentEstimate {
  std::vector<int> alpha;
  double value = 0.0;
  double error = 0.0;
  double abs_integral = 0.0;  ///< \int |u^alpha Kbar(u)| du
};

/// All multi-indices alpha in Z_+^d with |alpha| <= max_order, graded order.
std::vector<std::vector<int>> multi_indices(int dim, int max_order);

MomentEstimate kernel_moment(const KernelSpec& spec, const std::vector<int>& alpha,
                             const QuadratureConfig& quad = {});
MomentEstimate kernel_moment(const EquivalentKernel& ek, const std::vector<int>& alpha,
                             const QuadratureConfig& quad = {});

/// Every moment with |alpha| <= max_order from one pass over the grid.
std::vector<MomentEstimate> moment_table(const EquivalentKernel& ek, int max_order,
                                         const QuadratureConfig& quad = {});

/// \int Kbar^2 by quadrature, cross-checking equivalent_kernel_roughness.
MomentEstimate roughness_by_quadrature(const EquivalentKernel& ek, const QuadratureConfig& quad = {});

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace pairdiff

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pairdiff/kernel.hpp"
#include "pairdiff/types.hpp"

namespace pairdiff {

/// Generalized-jackknife plan: bandwidth multipliers c (c_0 = 1) and the
/// weights lambda that annihilate the h^2, ..., h^L bias terms.
struct DebiasPlan {
  int order = 0;  ///< L, even, one of 0, 2, 4
  Vector c;
  Vector lambdas;
  double condition = 1.0;  ///< 2-norm condition number of the Vandermonde system

  Eigen::Index levels() const { return c.size(); }
};

/// Weights solving sum_l lambda_l c_l^{2m} = [m == 0] for m = 0..L/2.
/// `condition`, when given, receives the system's condition number.
Vector solve_lambda(int order, const Vector& c, double* condition = nullptr);

/// Default multipliers: (1), (1, 1.5), (1, 1.5, 2.25).
Vector default_multipliers(int order);

/// Builds a validated plan; `c` defaults to default_multipliers(order).
DebiasPlan make_debias_plan(int order, std::optional<Vector> c = std::nullopt);

/// sum_l lambda_l * estimates[l].
Vector debias_combine(std::span<const Vector> estimates, const DebiasPlan& plan);

/// Kbar(u) = sum_l lambda_l K_{c_l}(u) for the given base kernel.
EquivalentKernel equivalent_kernel(const KernelSpec& base, const DebiasPlan& plan);

}  // namespace pairdiff

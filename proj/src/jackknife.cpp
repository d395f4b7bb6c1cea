#include "pairdiff/jackknife.hpp"

#include <cmath>
#include <string>

#include "pairdiff/error.hpp"

namespace pairdiff {

namespace {

void check_plan_inputs(int order, const Vector& c) {
  if (order != 0 && order != 2 && order != 4) {
    throw ConfigError("debiasing order L must be 0, 2 or 4 (got " + std::to_string(order) + ")");
  }
  const Eigen::Index levels = order / 2 + 1;
  if (c.size() != levels) {
    throw ConfigError("debiasing order L=" + std::to_string(order) + " needs " + std::to_string(levels) +
                      " bandwidth multipliers, got " + std::to_string(c.size()));
  }
  for (Eigen::Index l = 0; l < levels; ++l) {
    if (!(c[l] > 0.0) || !std::isfinite(c[l])) throw ConfigError("bandwidth multipliers must be positive and finite");
  }
  if (c[0] != 1.0) throw ConfigError("the first bandwidth multiplier must equal 1");
  for (Eigen::Index a = 0; a < levels; ++a) {
    for (Eigen::Index b = a + 1; b < levels; ++b) {
      if (c[a] == c[b]) throw ConfigError("bandwidth multipliers must be distinct (singular jackknife system)");
    }
  }
}

}  // namespace

Vector solve_lambda(int order, const Vector& c, double* condition) {
  check_plan_inputs(order, c);
  const Eigen::Index levels = c.size();
  // Row m holds c_l^{2m}.
  Matrix system(levels, levels);
  for (Eigen::Index l = 0; l < levels; ++l) {
    const double c2 = c[l] * c[l];
    double p = 1.0;
    for (Eigen::Index m = 0; m < levels; ++m) {
      system(m, l) = p;
      p *= c2;
    }
  }
  Vector rhs = Vector::Zero(levels);
  rhs[0] = 1.0;

  const Eigen::PartialPivLU<Matrix> lu(system);
  Vector lambda = lu.solve(rhs);
  for (int pass = 0; pass < 3; ++pass) {
    const Vector residual = rhs - system * lambda;
    if (residual.lpNorm<Eigen::Infinity>() == 0.0) break;
    lambda += lu.solve(residual);
  }
  if (!lambda.allFinite()) throw NumericalError("jackknife weight system is numerically singular");
  if (condition != nullptr) {
    const Eigen::JacobiSVD<Matrix> svd(system);
    const Vector& sv = svd.singularValues();
    *condition = sv[0] / sv[sv.size() - 1];
  }
  return lambda;
}

Vector default_multipliers(int order) {
  switch (order) {
    case 0:
      return Vector::Ones(1);
    case 2:
      return (Vector(2) << 1.0, 1.5).finished();
    case 4:
      return (Vector(3) << 1.0, 1.5, 2.25).finished();
    default:
      throw ConfigError("debiasing order L must be 0, 2 or 4 (got " + std::to_string(order) + ")");
  }
}

DebiasPlan make_debias_plan(int order, std::optional<Vector> c) {
  DebiasPlan plan;
  plan.order = order;
  plan.c = c ? *c : default_multipliers(order);
  plan.lambdas = solve_lambda(order, plan.c, &plan.condition);
  return plan;
}

Vector debias_combine(std::span<const Vector> estimates, const DebiasPlan& plan) {
  if (static_cast<Eigen::Index>(estimates.size()) != plan.lambdas.size()) {
    throw ConfigError("debias_combine expects " + std::to_string(plan.lambdas.size()) + " estimates, got " +
                      std::to_string(estimates.size()));
  }
  Vector out = plan.lambdas[0] * estimates[0];
  for (std::size_t l = 1; l < estimates.size(); ++l) {
    if (estimates[l].size() != out.size()) throw ConfigError("debias_combine: estimate dimensions differ");
    out += plan.lambdas[static_cast<Eigen::Index>(l)] * estimates[l];
  }
  return out;
}

EquivalentKernel equivalent_kernel(const KernelSpec& base, const DebiasPlan& plan) {
  return EquivalentKernel{base, plan.lambdas, plan.c};
}

}  // namespace pairdiff

#pragma once

#include <string>

#include "pairdiff/data.hpp"
#include "pairdiff/kernel.hpp"
#include "pairdiff/models.hpp"
#include "pairdiff/objective.hpp"

namespace pairdiff {

enum class InitRule { kPlrClosedForm, kZero };
enum class SolverPath { kClosedForm, kNewton, kGradientFallback, kNonsmooth };

std::string to_string(SolverPath path);
std::string to_string(InitRule rule);
InitRule parse_init_rule(std::string_view name);

struct SolverConfig {
  double slack = 0.0;        ///< objective slack; 0 selects min(1e-10, 0.01 / n^2)
  double grad_tol = 1e-10;   ///< target on the (minimum-norm) subgradient
  int max_iter = 200;
  int subgradient_iter = 0;  ///< optional Polyak warm-start steps before the active-set phase; 0 skips them
  double armijo = 1e-4;
  double backtrack = 0.5;
  InitRule init = InitRule::kPlrClosedForm;

  double slack_for(Eigen::Index n) const;
  void validate() const;
};

struct EstimateRecord {
  Vector theta;
  double h = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  SolverPath path = SolverPath::kClosedForm;
  double condition = 0.0;  ///< Gram or Hessian condition number at the solution
  bool certified = false;  ///< approximate-minimizer certificate passed
  RegimeDiagnostics regime;
};

/// Weighted pairwise least squares. Throws NumericalError on zero usable pairs or
/// a Gram condition number above 1e12, naming the degenerate direction.
EstimateRecord solve_plr_closed_form(const PairWeights& weights, const Dataset& data);

/// Damped Newton with backtracking for PLR and PLL. Falls back to gradient steps
/// when the Hessian is numerically singular. Throws NumericalError on
/// nonconvergence or pairwise separation.
EstimateRecord solve_smooth(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                            const SolverConfig& config, const Vector& init);

/// Subgradient phase followed by an active-set polish with exact line searches.
/// Accepts every model; piecewise-linear losses use breakpoint walks.
EstimateRecord solve_nonsmooth(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                               const SolverConfig& config, const Vector& init);

/// Starting point for iterative solvers per config.init.
Vector initial_point(const PairWeights& weights, const Dataset& data, const SolverConfig& config);

/// Builds the weights at bandwidth h and dispatches closed form > smooth > nonsmooth.
EstimateRecord estimate(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                        const SolverConfig& config = {});

/// Same as above on prebuilt weights.
EstimateRecord estimate(const PairWeights& weights, const Dataset& data, const PairwiseModel& model,
                        const SolverConfig& config = {});

}  // namespace pairdiff

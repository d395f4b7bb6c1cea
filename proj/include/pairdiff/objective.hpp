#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pairdiff/data.hpp"
#include "pairdiff/kernel.hpp"
#include "pairdiff/models.hpp"

namespace pairdiff {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double term) {
    const double t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term)) {
      comp_ += (sum_ - t) + term;
    } else {
      comp_ += (term - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct PairWeight {
  std::int32_t i;
  std::int32_t j;
  double weight;
};

/// K_h(w_i - w_j) for i < j in lexicographic order. Zero weights are dropped
/// when pruning; that never changes any objective value.
struct PairWeights {
  double h = 0.0;
  KernelSpec kernel;
  Eigen::Index n = 0;
  std::uint64_t fingerprint = 0;
  std::vector<PairWeight> pairs;
  std::size_t total_pairs = 0;  ///< C(n, 2)
  std::size_t nonzero = 0;
  double normalization = 0.0;   ///< C(n, 2)^{-1}

  bool degenerate() const { return nonzero == 0; }
};

/// Evaluates h^{-d} K(u / h) on raw difference vectors.
class ScaledKernel {
 public:
  ScaledKernel(const KernelSpec& spec, double h);
  double operator()(const double* diff) const;
  double h() const { return h_; }

 private:
  KernelSpec spec_;
  double h_;
  double inv_h_;
  double norm_;      ///< (2 pi)^{-d/2} for the Gaussian, 1 otherwise
  double inv_h_pow_; ///< h^{-d}
};

/// Throws ConfigError on nonpositive h.
PairWeights pairwise_weights(const Dataset& data, const KernelSpec& spec, double h, bool prune = true);

/// M_n(theta; h) = C(n,2)^{-1} sum_{i<j} m(z_i, z_j; theta) K_h(w_i - w_j).
double objective_value(const PairWeights& weights, const PairwiseModel& model, const Dataset& data, const Vector& theta);

/// C(n,2)^{-1} sum_{i<j} s(z_i, z_j; theta) K_h(w_i - w_j).
Vector objective_subgradient(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                             const Vector& theta);

/// C(n,2)^{-1} sum_{i<j} m''(u) K_h (x_i - x_j)(x_i - x_j)'; zero for PLT.
Matrix objective_hessian(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                         const Vector& theta);

/// Value, gradient and Hessian from one pass over the pairs.
struct ObjectiveEval {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

ObjectiveEval evaluate_objective(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                                 const Vector& theta, bool with_gradient, bool with_hessian);

/// Throws ConfigError if `weights` were not built from `data`.
void check_weights_match(const PairWeights& weights, const Dataset& data);

enum class Regime { kLinear, kIntermediate, kSmallBandwidth };
std::string to_string(Regime regime);

/// Heuristic labels on n h^d: linear if >= 20, small-bandwidth if <= 2.
struct RegimeThresholds {
  double linear = 20.0;
  double small_bandwidth = 2.0;
  double min_n2hd = 10.0;  ///< below this n^2 h^d is treated as outside the Gaussian-approximation range
};

struct RegimeDiagnostics {
  double nhd = 0.0;
  double n2hd = 0.0;
  double nonzero_fraction = 0.0;
  double rate = 0.0;  ///< rho_n = sqrt(min(n, C(n,2) h^d))
  Regime regime = Regime::kLinear;
  bool outside_scope = false;
};

RegimeDiagnostics regime_diagnostics(const PairWeights& weights, Eigen::Index n, double h, int d,
                                     const RegimeThresholds& thresholds = {});

}  // namespace pairdiff

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairdiff/data.hpp"
#include "pairdiff/jackknife.hpp"
#include "pairdiff/kernel.hpp"
#include "pairdiff/models.hpp"
#include "pairdiff/rng.hpp"
#include "pairdiff/solver.hpp"

namespace pairdiff {

/// Contrast a, level alpha, replicate count B and master seed.
struct CiSpec {
  Vector contrast;
  double alpha = 0.05;
  int B = 999;
  std::uint64_t seed = 1;

  /// Throws ConfigError unless a != 0 has length k, 0 < alpha < 1 and B >= 2.
  void validate(Eigen::Index k) const;
};

/// Per-level solves at c_l h and their jackknife combination.
struct DebiasedResult {
  DebiasPlan plan;
  double h = 0.0;
  std::vector<EstimateRecord> levels;
  Vector theta;  ///< sum_l lambda_l levels[l].theta
};

/// Solves at every c_l h and combines with lambda. L = 0 returns the single
/// estimate unchanged. A failing level is rethrown with its index and bandwidth.
DebiasedResult debiased_estimate(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                                 const DebiasPlan& plan, const SolverConfig& config = {});

/// Point estimates at each bandwidth in `hs`. PLR uses the single-pass
/// closed form; other models solve each bandwidth separately.
std::vector<Vector> estimates_at_bandwidths(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec,
                                            std::span<const double> hs, const SolverConfig& config = {});

/// n draws with replacement.
Dataset bootstrap_resample(const Dataset& data, Rng& rng);

/// Resample indices used by bootstrap_resample.
std::vector<Eigen::Index> bootstrap_indices(Eigen::Index n, Rng& rng);

struct BootstrapFailure {
  int index = 0;
  std::string message;
};

struct BootstrapOptions {
  bool rescale = true;        ///< replicate bandwidths 3^{1/d} c_l h; false gives the unscaled bootstrap
  bool keep_records = false;  ///< retain per-replicate solver records
  int threads = 0;            ///< 0 selects worker_count()
  double max_failure_fraction = 0.05;
};

struct BootstrapResult {
  double scale = 1.0;              ///< 3^{1/d} or 1
  std::vector<double> bandwidths;  ///< scale * c_l * h
  DebiasedResult center;           ///< full-sample estimates at the replicate bandwidths
  std::vector<int> index;          ///< replicate index of each draw, increasing
  std::vector<Vector> draws;       ///< combined replicate estimate minus center.theta
  std::vector<BootstrapFailure> failures;
  std::vector<std::vector<EstimateRecord>> records;  ///< per successful replicate, when kept
  int requested = 0;
};

/// Centered bootstrap draws. Replicate b uses the stream derive_seed(ci.seed,
/// {bootstrap, b}), so the result does not depend on the thread count. Solver
/// failures are recorded by index; more than max_failure_fraction of B aborts.
BootstrapResult bootstrap_draws(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                                const DebiasPlan& plan, const CiSpec& ci, const SolverConfig& config = {},
                                const BootstrapOptions& options = {});

/// inf{q : #{v <= q} / size >= t}, with t clamped to (0, 1].
double inf_quantile(std::span<const double> sorted_values, double t);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double length() const { return upper - lower; }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

/// [point - q_{1 - alpha/2}, point - q_{alpha/2}] from centered scalar draws.
Interval percentile_ci(double point, std::span<const double> draws, double alpha);

/// Same, projecting theta_tilde and the draws on ci.contrast.
Interval percentile_ci(const Vector& theta_tilde, const std::vector<Vector>& draws, const CiSpec& ci);

struct InferenceResult {
  DebiasedResult estimate;
  BootstrapResult bootstrap;
  Interval ci;
};

InferenceResult run_inference(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                              const DebiasPlan& plan, const CiSpec& ci, const SolverConfig& config = {},
                              const BootstrapOptions& options = {});

}  // namespace pairdiff

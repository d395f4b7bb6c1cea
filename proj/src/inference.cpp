#include "pairdiff/inference.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "pairdiff/error.hpp"
#include "pairdiff/parallel.hpp"
#include "pairdiff/plr_stream.hpp"

namespace pairdiff {

void CiSpec::validate(Eigen::Index k) const {
  if (contrast.size() != k) {
    throw ConfigError("contrast has " + std::to_string(contrast.size()) + " entries, expected " + std::to_string(k));
  }
  if (!contrast.allFinite() || contrast.isZero(0.0)) throw ConfigError("contrast must be a nonzero finite vector");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (B < 2) throw ConfigError("bootstrap replicate count B must be at least 2");
}

DebiasedResult debiased_estimate(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                                 const DebiasPlan& plan, const SolverConfig& config) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth must be positive and finite");
  DebiasedResult out;
  out.plan = plan;
  out.h = h;
  for (Eigen::Index l = 0; l < plan.levels(); ++l) {
    const double hl = plan.c[l] * h;
    try {
      out.levels.push_back(estimate(data, model, spec, hl, config));
    } catch (const NumericalError& e) {
      throw NumericalError("level " + std::to_string(l) + " (h = " + std::to_string(hl) + "): " + e.what());
    }
  }
  if (plan.levels() == 1) {
    out.theta = out.levels.front().theta;
  } else {
    std::vector<Vector> thetas;
    for (const EstimateRecord& r : out.levels) thetas.push_back(r.theta);
    out.theta = debias_combine(thetas, plan);
  }
  return out;
}

std::vector<Vector> estimates_at_bandwidths(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec,
                                            std::span<const double> hs, const SolverConfig& config) {
  if (model.id() == ModelId::kPlr) return plr_closed_form_multi(data, spec, hs);
  std::vector<Vector> out;
  out.reserve(hs.size());
  for (double h : hs) out.push_back(estimate(data, model, spec, h, config).theta);
  return out;
}

std::vector<Eigen::Index> bootstrap_indices(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index& i : idx) i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  return idx;
}

Dataset bootstrap_resample(const Dataset& data, Rng& rng) { return data.subset(bootstrap_indices(data.n(), rng)); }

namespace {

struct Replicate {
  Vector theta;
  std::vector<EstimateRecord> records;
};

Replicate solve_replicate(const Dataset& sample, const PairwiseModel& model, const KernelSpec& spec,
                          const DebiasPlan& plan, double scaled_h, const SolverConfig& config, bool keep_records) {
  Replicate rep;
  if (!keep_records) {
    std::vector<double> hs;
    for (Eigen::Index l = 0; l < plan.levels(); ++l) hs.push_back(plan.c[l] * scaled_h);
    const std::vector<Vector> thetas = estimates_at_bandwidths(sample, model, spec, hs, config);
    rep.theta = plan.levels() == 1 ? thetas.front() : debias_combine(thetas, plan);
    return rep;
  }
  DebiasedResult r = debiased_estimate(sample, model, spec, scaled_h, plan, config);
  rep.theta = std::move(r.theta);
  rep.records = std::move(r.levels);
  return rep;
}

}  // namespace

BootstrapResult bootstrap_draws(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                                const DebiasPlan& plan, const CiSpec& ci, const SolverConfig& config,
                                const BootstrapOptions& options) {
  if (ci.B < 1) throw ConfigError("bootstrap replicate count B must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth must be positive and finite");
  BootstrapResult out;
  out.requested = ci.B;
  out.scale = options.rescale ? std::pow(3.0, 1.0 / static_cast<double>(data.d())) : 1.0;
  const double scaled_h = out.scale * h;
  for (Eigen::Index l = 0; l < plan.levels(); ++l) out.bandwidths.push_back(plan.c[l] * scaled_h);
  out.center = debiased_estimate(data, model, spec, scaled_h, plan, config);

  const std::size_t B = static_cast<std::size_t>(ci.B);
  std::vector<std::optional<Replicate>> results(B);
  std::vector<std::string> errors(B);
  parallel_for(
      B,
      [&](std::size_t b) {
        Rng rng = make_stream(ci.seed, {stream::kBootstrap, b});
        const Dataset sample = bootstrap_resample(data, rng);
        try {
          results[b] = solve_replicate(sample, model, spec, plan, scaled_h, config, options.keep_records);
        } catch (const NumericalError& e) {
          errors[b] = e.what();
        }
      },
      options.threads);

  for (std::size_t b = 0; b < B; ++b) {
    if (!results[b]) {
      out.failures.push_back({static_cast<int>(b), errors[b]});
      continue;
    }
    out.index.push_back(static_cast<int>(b));
    out.draws.push_back(results[b]->theta - out.center.theta);
    if (options.keep_records) out.records.push_back(std::move(results[b]->records));
  }
  const double fraction = static_cast<double>(out.failures.size()) / static_cast<double>(B);
  if (fraction > options.max_failure_fraction) {
    throw NumericalError(std::to_string(out.failures.size()) + " of " + std::to_string(B) +
                         " bootstrap replicates failed (first: replicate " + std::to_string(out.failures.front().index) +
                         ": " + out.failures.front().message + ")");
  }
  return out;
}

double inf_quantile(std::span<const double> sorted_values, double t) {
  if (sorted_values.empty()) throw ConfigError("quantile of an empty sample");
  const std::size_t size = sorted_values.size();
  const double denom = static_cast<double>(size);
  std::size_t j = 1;
  if (t > 0.0) {
    j = static_cast<std::size_t>(std::clamp(std::ceil(t * denom), 1.0, denom));
    while (j > 1 && static_cast<double>(j - 1) / denom >= t) --j;
    while (j < size && static_cast<double>(j) / denom < t) ++j;
  }
  return sorted_values[j - 1];
}

Interval percentile_ci(double point, std::span<const double> draws, double alpha) {
  if (draws.empty()) throw ConfigError("percentile interval needs at least one bootstrap draw");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  return {point - inf_quantile(sorted, 1.0 - 0.5 * alpha), point - inf_quantile(sorted, 0.5 * alpha)};
}

Interval percentile_ci(const Vector& theta_tilde, const std::vector<Vector>& draws, const CiSpec& ci) {
  std::vector<double> projected;
  projected.reserve(draws.size());
  for (const Vector& v : draws) projected.push_back(ci.contrast.dot(v));
  return percentile_ci(ci.contrast.dot(theta_tilde), projected, ci.alpha);
}

InferenceResult run_inference(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                              const DebiasPlan& plan, const CiSpec& ci, const SolverConfig& config,
                              const BootstrapOptions& options) {
  ci.validate(data.k());
  InferenceResult out;
  out.estimate = debiased_estimate(data, model, spec, h, plan, config);
  out.bootstrap = bootstrap_draws(data, model, spec, h, plan, ci, config, options);
  out.ci = percentile_ci(out.estimate.theta, out.bootstrap.draws, ci);
  return out;
}

}  // namespace pairdiff

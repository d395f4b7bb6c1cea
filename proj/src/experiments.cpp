#include "pairdiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "pairdiff/csv.hpp"
#include "pairdiff/error.hpp"
#include "pairdiff/parallel.hpp"

namespace pairdiff {

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

namespace {

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json regime_json(const RegimeDiagnostics& r) {
  return {{"nhd", r.nhd},
          {"n2hd", r.n2hd},
          {"nonzero_fraction", r.nonzero_fraction},
          {"rate", r.rate},
          {"label", to_string(r.regime)},
          {"outside_scope", r.outside_scope}};
}

nlohmann::json plan_json(const DebiasPlan& p) {
  return {{"L", p.order}, {"c", vec_json(p.c)}, {"lambda", vec_json(p.lambdas)}, {"condition", p.condition}};
}

nlohmann::json debiased_json(const DebiasedResult& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const EstimateRecord& rec : r.levels) levels.push_back(record_json(rec));
  return {{"h", r.h}, {"theta", vec_json(r.theta)}, {"levels", levels}};
}

Dataset load_data(const RunConfig& cfg) {
  if (!cfg.uses_dgp()) return ingest_csv(cfg.data_path);
  return generate(cfg.dgp);
}

nlohmann::json data_json(const RunConfig& cfg, const Dataset& data) {
  return {{"n", data.n()}, {"k", data.k()}, {"d", data.d()}, {"source", cfg.uses_dgp() ? "dgp" : "file"}};
}

KernelSpec kernel_for(const RunConfig& cfg, Eigen::Index d) { return KernelSpec{cfg.kernel, static_cast<int>(d)}; }

void require_dgp(const RunConfig& cfg) {
  if (!cfg.uses_dgp()) throw ConfigError(cfg.command + " runs on a simulated design; remove 'data'");
}

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

Verdict band_verdict(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

std::string fmt(double v) { return format_real(v); }

}  // namespace

nlohmann::json record_json(const EstimateRecord& rec) {
  return {{"theta", vec_json(rec.theta)},
          {"h", rec.h},
          {"objective", rec.objective},
          {"initial_objective", rec.initial_objective},
          {"grad_norm", rec.grad_norm},
          {"iterations", rec.iterations},
          {"path", to_string(rec.path)},
          {"condition", rec.condition},
          {"certified", rec.certified},
          {"regime", regime_json(rec.regime)}};
}

std::string render_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Studies

CoverageReport coverage_study(const DgpConfig& dgp, const KernelSpec& spec, double h, const DebiasPlan& plan,
                              const CiSpec& ci, int reps, const SolverConfig& config, int threads) {
  dgp.validate();
  ci.validate(dgp.k);
  if (reps < 1) throw ConfigError("coverage needs at least one replicate");
  const PairwiseModel model(dgp.model);
  const double truth = ci.contrast.dot(dgp.true_theta());
  std::vector<std::optional<CoverageRow>> rows(static_cast<std::size_t>(reps));
  BootstrapOptions options;
  options.threads = 1;
  parallel_for(
      static_cast<std::size_t>(reps),
      [&](std::size_t r) {
        Rng rng = make_stream(dgp.seed, {stream::kData, r});
        const Dataset data = generate(dgp, rng);
        CiSpec rep_ci = ci;
        rep_ci.seed = derive_seed(ci.seed, {stream::kBootstrap, r});
        try {
          const InferenceResult res = run_inference(data, model, spec, h, plan, rep_ci, config, options);
          CoverageRow row;
          row.rep = static_cast<int>(r);
          row.estimate = ci.contrast.dot(res.estimate.theta);
          row.ci = res.ci;
          row.covered = res.ci.contains(truth);
          rows[r] = row;
        } catch (const NumericalError&) {
          // Counted as a failed replicate.
        }
      },
      threads);

  CoverageReport out;
  out.nominal = 1.0 - ci.alpha;
  out.truth = truth;
  int covered = 0;
  double length = 0.0;
  for (const auto& row : rows) {
    if (!row) {
      ++out.failures;
      continue;
    }
    out.rows.push_back(*row);
    covered += row->covered ? 1 : 0;
    length += row->ci.length();
  }
  if (out.failures > 0.05 * reps) {
    throw NumericalError(std::to_string(out.failures) + " of " + std::to_string(reps) + " coverage replicates failed");
  }
  out.reps = static_cast<int>(out.rows.size());
  out.coverage = static_cast<double>(covered) / out.reps;
  out.se = std::sqrt(out.coverage * (1.0 - out.coverage) / out.reps);
  out.average_length = length / out.reps;
  Rng rng = make_stream(dgp.seed, {stream::kData, 0});
  const Dataset first = generate(dgp, rng);
  out.regime = regime_diagnostics(pairwise_weights(first, spec, h), first.n(), h, spec.dim);
  return out;
}

InflationReport boot_inflation_study(const DgpConfig& dgp, const KernelSpec& spec, double h, const DebiasPlan& plan,
                                     const Vector& contrast, int reps, int B, int variance_reps, bool with_scaled,
                                     std::uint64_t seed, int threads) {
  if (dgp.model != ModelId::kPlr) throw ConfigError("boot-inflation is defined for PLR designs");
  dgp.validate();
  if (reps < 2 || B < 2) throw ConfigError("boot-inflation needs reps >= 2 and B >= 2");
  if (variance_reps <= 0) variance_reps = reps;
  const PairwiseModel model(ModelId::kPlr);
  InflationReport out;
  out.reps = reps;
  out.B = B;
  out.variance_reps = variance_reps;
  out.nhd = dgp.n * std::pow(h, dgp.d);

  // Monte Carlo variance of a' theta_tilde.
  std::vector<double> point(static_cast<std::size_t>(variance_reps));
  std::vector<double> hs;
  for (Eigen::Index l = 0; l < plan.levels(); ++l) hs.push_back(plan.c[l] * h);
  parallel_for(
      static_cast<std::size_t>(variance_reps),
      [&](std::size_t r) {
        Rng rng = make_stream(dgp.seed, {stream::kData, r});
        const Dataset data = generate(dgp, rng);
        const std::vector<Vector> t = estimates_at_bandwidths(data, model, spec, hs);
        point[r] = contrast.dot(plan.levels() == 1 ? t.front() : debias_combine(t, plan));
      },
      threads);
  out.var_mc = sample_variance(point);

  out.per_rep_unscaled.assign(static_cast<std::size_t>(reps), 0.0);
  out.per_rep_scaled.assign(static_cast<std::size_t>(with_scaled ? reps : 0), 0.0);
  parallel_for(
      static_cast<std::size_t>(reps),
      [&](std::size_t r) {
        Rng rng = make_stream(dgp.seed, {stream::kData, r});
        const Dataset data = generate(dgp, rng);
        CiSpec ci;
        ci.contrast = contrast;
        ci.B = B;
        ci.seed = derive_seed(seed, {stream::kBootstrap, r});
        BootstrapOptions opt;
        opt.threads = 1;
        auto projected_variance = [&](bool rescale) {
          opt.rescale = rescale;
          const BootstrapResult b = bootstrap_draws(data, model, spec, h, plan, ci, {}, opt);
          std::vector<double> v;
          for (const Vector& d : b.draws) v.push_back(contrast.dot(d));
          return sample_variance(v);
        };
        out.per_rep_unscaled[r] = projected_variance(false);
        if (with_scaled) out.per_rep_scaled[r] = projected_variance(true);
      },
      threads);
  for (double v : out.per_rep_unscaled) out.boot_var_unscaled += v / reps;
  for (double v : out.per_rep_scaled) out.boot_var_scaled += v / reps;
  out.r_unscaled = out.boot_var_unscaled / out.var_mc;
  out.r_scaled = with_scaled ? out.boot_var_scaled / out.var_mc : 0.0;

  const OracleComponents comp = oracle_components_plr_analytic(dgp, spec);
  const EquivalentKernel ek = equivalent_kernel(spec, plan);
  const Matrix vbar = variance_formula(comp, dgp.n, h, dgp.d, VarianceKind::kVbar, ek);
  const Matrix vstar = variance_formula(comp, dgp.n, h, dgp.d, VarianceKind::kVbarStar, ek);
  out.formula_ratio = contrast.dot(vstar * contrast) / contrast.dot(vbar * contrast);
  return out;
}

std::vector<VarianceMatchRow> variance_match_study(const DgpConfig& dgp, const KernelSpec& spec,
                                                   const std::vector<double>& hs, const DebiasPlan& plan, int reps,
                                                   long mc_samples, int threads) {
  Rng oracle_rng = make_stream(dgp.seed, {stream::kOracle});
  const OracleComponents mc = oracle_components_plr(dgp, spec, mc_samples, oracle_rng);
  const OracleComponents exact = oracle_components_plr_analytic(dgp, spec);
  const EquivalentKernel ek = equivalent_kernel(spec, plan);
  const VarianceKind kind = plan.order == 0 ? VarianceKind::kV : VarianceKind::kVbar;
  std::vector<VarianceMatchRow> rows;
  for (std::size_t g = 0; g < hs.size(); ++g) {
    DgpConfig cell = dgp;
    cell.seed = derive_seed(dgp.seed, {stream::kVariance, g});
    const SamplingVariance sv = empirical_sampling_variance(cell, spec, hs[g], plan, reps, threads);
    VarianceMatchRow row;
    row.h = hs[g];
    row.nhd = dgp.n * std::pow(hs[g], dgp.d);
    row.empirical = sv.covariance.diagonal();
    row.formula = variance_formula(mc, dgp.n, hs[g], dgp.d, kind, ek).diagonal();
    row.analytic = variance_formula(exact, dgp.n, hs[g], dgp.d, kind, ek).diagonal();
    row.ratio = row.empirical.cwiseQuotient(row.formula);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Commands

RunOutput run_estimate(const RunConfig& cfg) {
  const Dataset data = load_data(cfg);
  const PairwiseModel model(cfg.model);
  const double h = cfg.bandwidth(data.n());
  const DebiasPlan plan = cfg.plan();
  const DebiasedResult res = debiased_estimate(data, model, kernel_for(cfg, data.d()), h, plan, cfg.solver);
  RunOutput out;
  out.result = {{"command", "estimate"},
                {"config", cfg.to_json()},
                {"data", data_json(cfg, data)},
                {"h", h},
                {"plan", plan_json(plan)},
                {"theta", vec_json(res.theta)},
                {"estimate", debiased_json(res)}};
  return out;
}

RunOutput run_bootstrap_ci(const RunConfig& cfg) {
  const Dataset data = load_data(cfg);
  const PairwiseModel model(cfg.model);
  const double h = cfg.bandwidth(data.n());
  const DebiasPlan plan = cfg.plan();
  const CiSpec ci = cfg.ci_spec(data.k());
  BootstrapOptions options;
  options.keep_records = cfg.verbose;
  const InferenceResult res = run_inference(data, model, kernel_for(cfg, data.d()), h, plan, ci, cfg.solver, options);

  const BootstrapResult& b = res.bootstrap;
  Vector mean = Vector::Zero(data.k());
  for (const Vector& d : b.draws) mean += d;
  mean /= static_cast<double>(b.draws.size());
  Vector sd = Vector::Zero(data.k());
  for (const Vector& d : b.draws) sd += (d - mean).cwiseProduct(d - mean);
  sd = (sd / static_cast<double>(std::max<std::size_t>(b.draws.size() - 1, 1))).cwiseSqrt();
  nlohmann::json failures = nlohmann::json::array();
  for (const BootstrapFailure& f : b.failures) failures.push_back({{"index", f.index}, {"message", f.message}});
  nlohmann::json boot = {{"scale", b.scale},
                         {"bandwidths", b.bandwidths},
                         {"center", debiased_json(b.center)},
                         {"requested", b.requested},
                         {"successful", b.draws.size()},
                         {"failures", failures},
                         {"draw_mean", vec_json(mean)},
                         {"draw_sd", vec_json(sd)}};
  Table table;
  table.header = {"replicate"};
  for (Eigen::Index j = 0; j < data.k(); ++j) table.header.push_back("draw" + std::to_string(j + 1));
  table.header.push_back("contrast_draw");
  for (std::size_t i = 0; i < b.draws.size(); ++i) {
    std::vector<std::string> row{std::to_string(b.index[i])};
    for (Eigen::Index j = 0; j < data.k(); ++j) row.push_back(fmt(b.draws[i][j]));
    row.push_back(fmt(ci.contrast.dot(b.draws[i])));
    table.rows.push_back(std::move(row));
  }
  if (cfg.verbose) {
    nlohmann::json reps = nlohmann::json::array();
    for (std::size_t i = 0; i < b.records.size(); ++i) {
      nlohmann::json levels = nlohmann::json::array();
      for (const EstimateRecord& rec : b.records[i]) levels.push_back(record_json(rec));
      reps.push_back({{"index", b.index[i]}, {"levels", levels}, {"draw", vec_json(b.draws[i])}});
    }
    boot["replicates"] = reps;
  }
  RunOutput out;
  out.result = {{"command", "bootstrap-ci"},
                {"config", cfg.to_json()},
                {"data", data_json(cfg, data)},
                {"h", h},
                {"plan", plan_json(plan)},
                {"theta", vec_json(res.estimate.theta)},
                {"estimate", debiased_json(res.estimate)},
                {"bootstrap", boot},
                {"ci",
                 {{"lower", res.ci.lower},
                  {"upper", res.ci.upper},
                  {"alpha", ci.alpha},
                  {"level", 1.0 - ci.alpha},
                  {"contrast", vec_json(ci.contrast)},
                  {"point", ci.contrast.dot(res.estimate.theta)}}}};
  out.table = std::move(table);
  return out;
}

RunOutput run_coverage(const RunConfig& cfg) {
  require_dgp(cfg);
  const KernelSpec spec = kernel_for(cfg, cfg.dgp.d);
  const double h = cfg.bandwidth(cfg.dgp.n);
  const DebiasPlan plan = cfg.plan();
  const CiSpec ci = cfg.ci_spec(cfg.dgp.k);
  const CoverageReport rep = coverage_study(cfg.dgp, spec, h, plan, ci, cfg.validate.reps, cfg.solver);
  const double nominal_se = std::sqrt(rep.nominal * (1.0 - rep.nominal) / rep.reps);
  const Band band = cfg.validate.band.value_or(Band{rep.nominal - 3.0 * nominal_se, rep.nominal + 3.0 * nominal_se});
  RunOutput out;
  out.verdict = band_verdict(band.contains(rep.coverage));
  out.result = {{"command", "validate coverage"},
                {"config", cfg.to_json()},
                {"h", h},
                {"plan", plan_json(plan)},
                {"nominal", rep.nominal},
                {"coverage", rep.coverage},
                {"se", rep.se},
                {"reps", rep.reps},
                {"failures", rep.failures},
                {"average_length", rep.average_length},
                {"truth", rep.truth},
                {"regime", regime_json(rep.regime)},
                {"band", {band.lo, band.hi}},
                {"verdict", to_string(*out.verdict)}};
  Table t;
  t.header = {"rep", "estimate", "lower", "upper", "covered"};
  for (const CoverageRow& r : rep.rows) {
    t.rows.push_back({std::to_string(r.rep), fmt(r.estimate), fmt(r.ci.lower), fmt(r.ci.upper), r.covered ? "1" : "0"});
  }
  out.table = std::move(t);
  return out;
}

RunOutput run_boot_inflation(const RunConfig& cfg) {
  require_dgp(cfg);
  const KernelSpec spec = kernel_for(cfg, cfg.dgp.d);
  const double h = cfg.bandwidth(cfg.dgp.n);
  const DebiasPlan plan = cfg.plan();
  const Vector contrast = cfg.contrast.value_or(Vector::Unit(cfg.dgp.k, 0));
  const Band unscaled = cfg.validate.unscaled_band.value_or(Band{2.0, 4.0});
  const std::optional<Band> scaled = cfg.validate.scaled_band;
  const InflationReport rep = boot_inflation_study(cfg.dgp, spec, h, plan, contrast, cfg.validate.reps, cfg.B,
                                                   cfg.validate.variance_reps, scaled.has_value(), cfg.seed);
  const bool ok = unscaled.contains(rep.r_unscaled) && (!scaled || scaled->contains(rep.r_scaled));
  RunOutput out;
  out.verdict = band_verdict(ok);
  out.result = {{"command", "validate boot-inflation"},
                {"config", cfg.to_json()},
                {"h", h},
                {"nhd", rep.nhd},
                {"plan", plan_json(plan)},
                {"var_mc", rep.var_mc},
                {"boot_var_unscaled", rep.boot_var_unscaled},
                {"boot_var_scaled", scaled ? nlohmann::json(rep.boot_var_scaled) : nlohmann::json(nullptr)},
                {"r_unscaled", rep.r_unscaled},
                {"r_scaled", scaled ? nlohmann::json(rep.r_scaled) : nlohmann::json(nullptr)},
                {"formula_ratio", rep.formula_ratio},
                {"reps", rep.reps},
                {"variance_reps", rep.variance_reps},
                {"B", rep.B},
                {"unscaled_band", {unscaled.lo, unscaled.hi}},
                {"scaled_band", scaled ? nlohmann::json::array({scaled->lo, scaled->hi}) : nlohmann::json(nullptr)},
                {"verdict", to_string(*out.verdict)}};
  Table t;
  t.header = {"rep", "boot_var_unscaled", "boot_var_scaled"};
  for (int r = 0; r < rep.reps; ++r) {
    t.rows.push_back({std::to_string(r), fmt(rep.per_rep_unscaled[static_cast<std::size_t>(r)]),
                      scaled ? fmt(rep.per_rep_scaled[static_cast<std::size_t>(r)]) : std::string()});
  }
  out.table = std::move(t);
  return out;
}

RunOutput run_bias_order(const RunConfig& cfg) {
  require_dgp(cfg);
  const KernelSpec spec = kernel_for(cfg, cfg.dgp.d);
  const DebiasPlan base = make_debias_plan(0);
  const DebiasPlan debiased = cfg.order == 0 ? make_debias_plan(2) : cfg.plan();
  const std::vector<double> grid =
      cfg.validate.h_grid.empty() ? std::vector<double>{1.6, 1.13, 0.8, 0.57, 0.4} : cfg.validate.h_grid;
  const std::vector<BiasCurve> curves =
      bias_curves(cfg.dgp, spec, {base, debiased}, grid, cfg.validate.reps, cfg.validate.coordinate);
  const Band band0 = cfg.validate.slope_band_base.value_or(Band{1.6, 2.4});
  const double target = debiased.order + 2.0;
  const Band band1 = cfg.validate.slope_band_debiased.value_or(Band{0.8 * target, 1.2 * target});
  Verdict verdict = Verdict::kPass;
  if (curves[0].status != CurveStatus::kOk || curves[1].status != CurveStatus::kOk) {
    verdict = Verdict::kInconclusive;
  } else {
    const double gap = curves[1].slope - curves[0].slope;
    const bool ok = band0.contains(curves[0].slope) && band1.contains(curves[1].slope) &&
                    std::abs(gap - debiased.order) <= cfg.validate.slope_gap_tol;
    verdict = band_verdict(ok);
  }
  nlohmann::json cj = nlohmann::json::array();
  Table t;
  t.header = {"L", "h", "bias", "se", "qualifying"};
  for (const BiasCurve& c : curves) {
    std::vector<double> bias;
    std::vector<double> se;
    for (std::size_t g = 0; g < c.h.size(); ++g) {
      bias.push_back(c.bias[g][c.coordinate]);
      se.push_back(c.se[g][c.coordinate]);
      t.rows.push_back({std::to_string(c.order), fmt(c.h[g]), fmt(bias.back()), fmt(se.back()),
                        c.qualifying[g] ? "1" : "0"});
    }
    cj.push_back({{"L", c.order},
                  {"h", c.h},
                  {"bias", bias},
                  {"se", se},
                  {"qualifying", c.qualifying},
                  {"slope", c.slope},
                  {"status", to_string(c.status)},
                  {"reps", c.reps}});
  }
  RunOutput out;
  out.verdict = verdict;
  out.result = {{"command", "validate bias-order"},
                {"config", cfg.to_json()},
                {"curves", cj},
                {"slope_band_base", {band0.lo, band0.hi}},
                {"slope_band_debiased", {band1.lo, band1.hi}},
                {"verdict", to_string(verdict)}};
  out.table = std::move(t);
  return out;
}

RunOutput run_variance_match(const RunConfig& cfg) {
  require_dgp(cfg);
  const KernelSpec spec = kernel_for(cfg, cfg.dgp.d);
  const DebiasPlan plan = cfg.plan();
  std::vector<double> hs = cfg.validate.h_grid;
  if (hs.empty()) hs = {50.0 / cfg.dgp.n, 2.0 / cfg.dgp.n};
  const int reps = cfg.validate.variance_reps > 0 ? cfg.validate.variance_reps : cfg.validate.reps;
  const std::vector<VarianceMatchRow> rows =
      variance_match_study(cfg.dgp, spec, hs, plan, reps, cfg.validate.mc_samples);
  const Band band = cfg.validate.band.value_or(Band{0.7, 1.4});
  bool ok = true;
  nlohmann::json rj = nlohmann::json::array();
  Table t;
  t.header = {"h", "nhd", "coordinate", "empirical", "formula", "analytic", "ratio"};
  for (const VarianceMatchRow& r : rows) {
    for (Eigen::Index j = 0; j < r.ratio.size(); ++j) {
      ok = ok && band.contains(r.ratio[j]);
      t.rows.push_back({fmt(r.h), fmt(r.nhd), std::to_string(j), fmt(r.empirical[j]), fmt(r.formula[j]),
                        fmt(r.analytic[j]), fmt(r.ratio[j])});
    }
    rj.push_back({{"h", r.h},
                  {"nhd", r.nhd},
                  {"empirical", vec_json(r.empirical)},
                  {"formula", vec_json(r.formula)},
                  {"analytic", vec_json(r.analytic)},
                  {"ratio", vec_json(r.ratio)}});
  }
  RunOutput out;
  out.verdict = band_verdict(ok);
  out.result = {{"command", "validate variance-match"},
                {"config", cfg.to_json()},
                {"rows", rj},
                {"band", {band.lo, band.hi}},
                {"verdict", to_string(*out.verdict)}};
  out.table = std::move(t);
  return out;
}

RunOutput run_kernel_check(const RunConfig& cfg) {
  const KernelSpec base{cfg.kernel, cfg.dgp.d};
  const DebiasPlan plan = cfg.plan();
  const EquivalentKernel ek = equivalent_kernel(base, plan);
  const int top = plan.order + 2;
  const std::vector<MomentEstimate> moments = moment_table(ek, top);
  bool ok = true;
  double top_moment = 0.0;
  Table t;
  t.header = {"alpha", "order", "value", "error"};
  nlohmann::json mj = nlohmann::json::array();
  for (const MomentEstimate& m : moments) {
    int order = 0;
    std::string label;
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
      order += m.alpha[i];
      label += (i ? ":" : "") + std::to_string(m.alpha[i]);
    }
    if (order == 0) ok = ok && std::abs(m.value - 1.0) <= 1e-6;
    if (order > 0 && order <= top - 1) ok = ok && std::abs(m.value) <= 1e-6;
    if (order == top) top_moment = std::max(top_moment, std::abs(m.value));
    t.rows.push_back({label, std::to_string(order), fmt(m.value), fmt(m.error)});
    mj.push_back({{"alpha", m.alpha}, {"value", m.value}, {"error", m.error}});
  }
  ok = ok && top_moment > 1e-3;
  const MomentEstimate rough = roughness_by_quadrature(ek);
  const double closed = equivalent_kernel_roughness(ek);
  RunOutput out;
  out.verdict = band_verdict(ok);
  out.result = {{"command", "kernel-check"},
                {"config", cfg.to_json()},
                {"plan", plan_json(plan)},
                {"kernel_order", ok ? nlohmann::json(top) : nlohmann::json(nullptr)},
                {"moments", mj},
                {"top_moment", top_moment},
                {"roughness_closed_form", closed},
                {"roughness_quadrature", rough.value},
                {"verdict", to_string(*out.verdict)}};
  out.table = std::move(t);
  return out;
}

RunOutput run_simulate(const RunConfig& cfg) {
  require_dgp(cfg);
  if (cfg.out.empty()) throw ConfigError("simulate needs --out for the CSV file");
  const Dataset data = generate(cfg.dgp);
  RunOutput out;
  out.result = {{"command", "simulate"}, {"config", cfg.to_json()}, {"data", data_json(cfg, data)}};
  Table t;
  t.header = {"y"};
  for (Eigen::Index j = 0; j < data.k(); ++j) t.header.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < data.d(); ++j) t.header.push_back("w" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row{fmt(data.y()[i])};
    for (Eigen::Index j = 0; j < data.k(); ++j) row.push_back(fmt(data.x()(i, j)));
    for (Eigen::Index j = 0; j < data.d(); ++j) row.push_back(fmt(data.w()(i, j)));
    t.rows.push_back(std::move(row));
  }
  out.table = std::move(t);
  return out;
}

RunOutput run_command(const RunConfig& cfg) {
  if (cfg.command == "estimate") return run_estimate(cfg);
  if (cfg.command == "bootstrap-ci") return run_bootstrap_ci(cfg);
  if (cfg.command == "coverage") return run_coverage(cfg);
  if (cfg.command == "boot-inflation") return run_boot_inflation(cfg);
  if (cfg.command == "bias-order") return run_bias_order(cfg);
  if (cfg.command == "variance-match") return run_variance_match(cfg);
  if (cfg.command == "kernel-check") return run_kernel_check(cfg);
  if (cfg.command == "simulate") return run_simulate(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

void write_outputs(const RunOutput& output, const RunConfig& cfg) {
  const std::string text = render_json(output.result);
  if (cfg.command == "simulate") {
    write_table(cfg.out, output.table->header, output.table->rows);
    std::cout << text;
    return;
  }
  if (cfg.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw IoError("cannot write '" + cfg.out + "'");
    f << text;
    if (!f) throw IoError("failed while writing '" + cfg.out + "'");
  }
  if (!output.table) return;
  std::string table_path = cfg.table;
  if (table_path.empty() && !cfg.out.empty()) {
    table_path = cfg.out;
    const auto dot = table_path.rfind('.');
    const auto slash = table_path.rfind('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) table_path.erase(dot);
    table_path += ".csv";
  }
  if (!table_path.empty()) write_table(table_path, output.table->header, output.table->rows);
}

}  // namespace pairdiff

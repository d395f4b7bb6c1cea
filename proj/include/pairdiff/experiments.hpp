#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pairdiff/config.hpp"
#include "pairdiff/inference.hpp"
#include "pairdiff/objective.hpp"
#include "pairdiff/oracle.hpp"

namespace pairdiff {

enum class Verdict { kPass, kFail, kInconclusive };
std::string to_string(Verdict verdict);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Result document (keys sorted on output) plus an optional CSV table.
struct RunOutput {
  nlohmann::json result;
  std::optional<Table> table;
  std::optional<Verdict> verdict;
};

struct CoverageRow {
  int rep = 0;
  double estimate = 0.0;  ///< a' theta_tilde
  Interval ci;
  bool covered = false;
};

struct CoverageReport {
  double nominal = 0.0;
  double coverage = 0.0;
  double se = 0.0;  ///< sqrt(p (1 - p) / reps) at the empirical p
  int reps = 0;     ///< replicates that produced an interval
  int failures = 0;
  double average_length = 0.0;
  double truth = 0.0;  ///< a' theta0
  RegimeDiagnostics regime;
  std::vector<CoverageRow> rows;
};

/// Replicate r draws data on (dgp.seed, {data, r}) and bootstraps on
/// derive_seed(ci.seed, {bootstrap, r}). More than 5% failed replicates abort.
CoverageReport coverage_study(const DgpConfig& dgp, const KernelSpec& spec, double h, const DebiasPlan& plan,
                              const CiSpec& ci, int reps, const SolverConfig& config = {}, int threads = 0);

struct InflationReport {
  double var_mc = 0.0;              ///< Monte Carlo variance of a' theta_tilde
  double boot_var_unscaled = 0.0;   ///< mean over replicates of var*(a' draws), bandwidths c_l h
  double boot_var_scaled = 0.0;     ///< same at 3^{1/d} c_l h
  double r_unscaled = 0.0;
  double r_scaled = 0.0;
  double formula_ratio = 0.0;       ///< a' Vbar* a / a' Vbar a from the analytic oracle
  int reps = 0;
  int variance_reps = 0;
  int B = 0;
  double nhd = 0.0;
  std::vector<double> per_rep_unscaled;
  std::vector<double> per_rep_scaled;
};

/// Bootstrap variance ratios for the PLR design. The scaled run is skipped when
/// `with_scaled` is false.
InflationReport boot_inflation_study(const DgpConfig& dgp, const KernelSpec& spec, double h, const DebiasPlan& plan,
                                     const Vector& contrast, int reps, int B, int variance_reps, bool with_scaled,
                                     std::uint64_t seed, int threads = 0);

struct VarianceMatchRow {
  double h = 0.0;
  double nhd = 0.0;
  Vector empirical;   ///< diagonal of the Monte Carlo covariance
  Vector formula;     ///< diagonal of the oracle formula (Monte Carlo components)
  Vector analytic;    ///< diagonal with closed-form components
  Vector ratio;       ///< empirical / formula
};

std::vector<VarianceMatchRow> variance_match_study(const DgpConfig& dgp, const KernelSpec& spec,
                                                   const std::vector<double>& hs, const DebiasPlan& plan, int reps,
                                                   long mc_samples, int threads = 0);

nlohmann::json record_json(const EstimateRecord& rec);

RunOutput run_estimate(const RunConfig& cfg);
RunOutput run_bootstrap_ci(const RunConfig& cfg);
RunOutput run_coverage(const RunConfig& cfg);
RunOutput run_boot_inflation(const RunConfig& cfg);
RunOutput run_bias_order(const RunConfig& cfg);
RunOutput run_variance_match(const RunConfig& cfg);
RunOutput run_kernel_check(const RunConfig& cfg);
RunOutput run_simulate(const RunConfig& cfg);

/// Dispatches on cfg.command.
RunOutput run_command(const RunConfig& cfg);

/// Writes the JSON to cfg.out (stdout when empty) and the table to cfg.table,
/// defaulting to cfg.out with a .csv extension.
void write_outputs(const RunOutput& output, const RunConfig& cfg);

/// JSON text exactly as written to disk.
std::string render_json(const nlohmann::json& j);

}  // namespace pairdiff

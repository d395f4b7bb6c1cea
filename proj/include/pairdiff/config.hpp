#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pairdiff/dgp.hpp"
#include "pairdiff/inference.hpp"
#include "pairdiff/jackknife.hpp"
#include "pairdiff/kernel.hpp"
#include "pairdiff/models.hpp"
#include "pairdiff/solver.hpp"

namespace pairdiff {

/// Flat `key = value` text with dotted keys; `#` starts a comment. Later
/// assignments win, and merge() lets command-line flags override a file.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& origin = "<config>");
  static KeyValues load(const std::string& path);

  void set(const std::string& key, std::string value);
  void merge(const KeyValues& overrides);
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// h = constant * n^{-kappa}.
struct HRule {
  double constant = 1.0;
  double kappa = 1.0 / 3.0;
};

struct Band {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

struct ValidateConfig {
  int reps = 400;
  int variance_reps = 0;  ///< datasets for Monte Carlo variances; 0 means reps
  std::vector<double> h_grid;
  long mc_samples = 200000;
  int coordinate = 0;
  std::optional<Band> band;                ///< coverage or variance-ratio band
  std::optional<Band> unscaled_band;
  std::optional<Band> scaled_band;         ///< unset skips the rescaled check
  std::optional<Band> slope_band_base;
  std::optional<Band> slope_band_debiased;
  double slope_gap_tol = 0.8;
};

struct RunConfig {
  std::string command;
  ModelId model = ModelId::kPlr;
  std::string data_path;  ///< empty selects the DGP
  DgpConfig dgp;
  KernelFamily kernel = KernelFamily::kGaussian;
  std::optional<double> h;
  std::optional<HRule> h_rule;
  int order = 0;
  std::optional<Vector> c;
  double alpha = 0.05;
  int B = 999;
  std::optional<Vector> contrast;
  std::uint64_t seed = 1;
  SolverConfig solver;
  std::string out;
  std::string table;
  bool verbose = false;
  ValidateConfig validate;

  bool uses_dgp() const { return data_path.empty(); }
  /// Explicit h, else the rule (default 1 * n^{-1/3}).
  double bandwidth(Eigen::Index n) const;
  DebiasPlan plan() const;
  /// Contrast defaults to the first unit vector.
  CiSpec ci_spec(Eigen::Index k) const;
  nlohmann::json to_json() const;
};

/// Typed view of the merged keys; unknown keys and malformed values throw ConfigError.
RunConfig parse_run_config(const KeyValues& kv);

std::vector<double> parse_real_list(std::string_view text, const std::string& key);
HRule parse_h_rule(std::string_view text);

}  // namespace pairdiff

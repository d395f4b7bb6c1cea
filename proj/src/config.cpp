#include "pairdiff/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "pairdiff/error.hpp"

namespace pairdiff {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_real(std::string_view text, const std::string& key) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError("'" + key + "' expects a real number, got '" + s + "'");
  }
  return v;
}

long parse_integer(std::string_view text, const std::string& key) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError("'" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& key) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view text, const std::string& key) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + s + "'");
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

Band parse_band(std::string_view text, const std::string& key) {
  const std::vector<double> v = parse_real_list(text, key);
  if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError("'" + key + "' expects 'lo,hi' with lo <= hi");
  return {v[0], v[1]};
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "command", "model", "data", "kernel", "h", "h_rule", "L", "c", "alpha", "B", "contrast", "seed", "out",
      "table", "verbose",
      "dgp.n", "dgp.k", "dgp.d", "dgp.gamma", "dgp.theta0", "dgp.error_scale", "dgp.w", "dgp.w_a", "dgp.w_b",
      "dgp.x_loading", "dgp.x_noise", "dgp.intercept",
      "solver.max_iter", "solver.grad_tol", "solver.slack", "solver.subgradient_iter", "solver.init",
      "solver.seed_free",
      "validate.reps", "validate.variance_reps", "validate.h_grid", "validate.mc_samples", "validate.coordinate",
      "validate.band", "validate.unscaled_band", "validate.scaled_band", "validate.slope_band_base",
      "validate.slope_band_debiased", "validate.slope_gap_tol"};
  return keys;
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json band_json(const std::optional<Band>& b) {
  if (!b) return nullptr;
  return nlohmann::json::array({b->lo, b->hi});
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
    kv.set(key, trim(std::string_view(body).substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void KeyValues::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void KeyValues::merge(const KeyValues& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> parse_real_list(std::string_view text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) out.push_back(parse_real(item, key));
  if (out.empty()) throw ConfigError("'" + key + "' expects a comma-separated list of reals");
  return out;
}

HRule parse_h_rule(std::string_view text) {
  const std::vector<double> v = parse_real_list(text, "h_rule");
  if (v.size() != 2) throw ConfigError("h_rule expects 'C,kappa'");
  if (!(v[0] > 0.0)) throw ConfigError("h_rule constant must be positive");
  if (!(v[1] > 0.0 && v[1] < 1.0)) throw ConfigError("h_rule exponent kappa must lie in (0, 1)");
  return {v[0], v[1]};
}

double RunConfig::bandwidth(Eigen::Index n) const {
  if (h) return *h;
  const HRule rule = h_rule.value_or(HRule{});
  return rule.constant * std::pow(static_cast<double>(n), -rule.kappa);
}

DebiasPlan RunConfig::plan() const { return make_debias_plan(order, c); }

CiSpec RunConfig::ci_spec(Eigen::Index k) const {
  CiSpec ci;
  ci.contrast = contrast.value_or(Vector::Unit(k, 0));
  ci.alpha = alpha;
  ci.B = B;
  ci.seed = seed;
  ci.validate(k);
  return ci;
}

RunConfig parse_run_config(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (!known_keys().count(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  RunConfig cfg;
  auto get = [&](const char* key) { return kv.get(key); };
  bool any_dgp = false;
  for (const auto& [key, value] : kv.entries()) any_dgp = any_dgp || key.rfind("dgp.", 0) == 0;

  if (auto v = get("command")) cfg.command = *v;
  if (auto v = get("model")) cfg.model = parse_model_id(trim(*v));
  if (auto v = get("data")) cfg.data_path = trim(*v);
  if (!cfg.data_path.empty() && any_dgp) {
    throw ConfigError("exactly one data source is allowed: 'data' and dgp.* keys were both given");
  }
  if (auto v = get("kernel")) cfg.kernel = parse_kernel_family(trim(*v));
  if (auto v = get("h")) {
    cfg.h = parse_real(*v, "h");
    if (!(*cfg.h > 0.0)) throw ConfigError("h must be positive");
  }
  if (auto v = get("h_rule")) cfg.h_rule = parse_h_rule(*v);
  if (cfg.h && cfg.h_rule) throw ConfigError("give either h or h_rule, not both");
  if (auto v = get("L")) cfg.order = static_cast<int>(parse_integer(*v, "L"));
  if (auto v = get("c")) cfg.c = to_vector(parse_real_list(*v, "c"));
  if (auto v = get("alpha")) cfg.alpha = parse_real(*v, "alpha");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (auto v = get("B")) cfg.B = static_cast<int>(parse_integer(*v, "B"));
  if (auto v = get("contrast")) cfg.contrast = to_vector(parse_real_list(*v, "contrast"));
  if (auto v = get("seed")) cfg.seed = parse_unsigned(*v, "seed");
  if (auto v = get("out")) cfg.out = trim(*v);
  if (auto v = get("table")) cfg.table = trim(*v);
  if (auto v = get("verbose")) cfg.verbose = parse_bool(*v, "verbose");

  DgpConfig& d = cfg.dgp;
  d.model = cfg.model;
  d.seed = cfg.seed;
  if (auto v = get("dgp.n")) d.n = static_cast<int>(parse_integer(*v, "dgp.n"));
  if (auto v = get("dgp.k")) d.k = static_cast<int>(parse_integer(*v, "dgp.k"));
  if (auto v = get("dgp.d")) d.d = static_cast<int>(parse_integer(*v, "dgp.d"));
  if (auto v = get("dgp.gamma")) d.gamma = parse_gamma_shape(trim(*v));
  if (auto v = get("dgp.theta0")) d.theta0 = to_vector(parse_real_list(*v, "dgp.theta0"));
  if (auto v = get("dgp.error_scale")) d.error_scale = parse_real(*v, "dgp.error_scale");
  if (auto v = get("dgp.w")) {
    const std::string kind = trim(*v);
    if (kind == "gaussian") {
      d.w.kind = WDistribution::Kind::kGaussian;
    } else if (kind == "uniform") {
      d.w.kind = WDistribution::Kind::kUniform;
      if (!get("dgp.w_a")) d.w.a = 0.0;
      if (!get("dgp.w_b")) d.w.b = 1.0;
    } else {
      throw ConfigError("dgp.w must be gaussian or uniform");
    }
  }
  if (auto v = get("dgp.w_a")) d.w.a = parse_real(*v, "dgp.w_a");
  if (auto v = get("dgp.w_b")) d.w.b = parse_real(*v, "dgp.w_b");
  if (auto v = get("dgp.x_loading")) d.x_loading = parse_real(*v, "dgp.x_loading");
  if (auto v = get("dgp.x_noise")) d.x_noise = parse_real(*v, "dgp.x_noise");
  if (auto v = get("dgp.intercept")) d.intercept = parse_real(*v, "dgp.intercept");
  if (cfg.uses_dgp()) d.validate();

  SolverConfig& s = cfg.solver;
  if (auto v = get("solver.max_iter")) s.max_iter = static_cast<int>(parse_integer(*v, "solver.max_iter"));
  if (auto v = get("solver.grad_tol")) s.grad_tol = parse_real(*v, "solver.grad_tol");
  if (auto v = get("solver.slack")) s.slack = parse_real(*v, "solver.slack");
  if (auto v = get("solver.subgradient_iter")) {
    s.subgradient_iter = static_cast<int>(parse_integer(*v, "solver.subgradient_iter"));
  }
  if (auto v = get("solver.init")) s.init = parse_init_rule(trim(*v));
  if (auto v = get("solver.seed_free")) {
    if (!parse_bool(*v, "solver.seed_free")) throw ConfigError("solver.seed_free cannot be disabled: solvers never draw random numbers");
  }
  s.validate();

  ValidateConfig& val = cfg.validate;
  if (auto v = get("validate.reps")) val.reps = static_cast<int>(parse_integer(*v, "validate.reps"));
  if (auto v = get("validate.variance_reps")) {
    val.variance_reps = static_cast<int>(parse_integer(*v, "validate.variance_reps"));
  }
  if (auto v = get("validate.h_grid")) val.h_grid = parse_real_list(*v, "validate.h_grid");
  if (auto v = get("validate.mc_samples")) val.mc_samples = parse_integer(*v, "validate.mc_samples");
  if (auto v = get("validate.coordinate")) val.coordinate = static_cast<int>(parse_integer(*v, "validate.coordinate"));
  if (auto v = get("validate.band")) val.band = parse_band(*v, "validate.band");
  if (auto v = get("validate.unscaled_band")) val.unscaled_band = parse_band(*v, "validate.unscaled_band");
  if (auto v = get("validate.scaled_band")) {
    if (trim(*v) != "none") val.scaled_band = parse_band(*v, "validate.scaled_band");
  }
  if (auto v = get("validate.slope_band_base")) val.slope_band_base = parse_band(*v, "validate.slope_band_base");
  if (auto v = get("validate.slope_band_debiased")) {
    val.slope_band_debiased = parse_band(*v, "validate.slope_band_debiased");
  }
  if (auto v = get("validate.slope_gap_tol")) val.slope_gap_tol = parse_real(*v, "validate.slope_gap_tol");
  if (val.reps < 1) throw ConfigError("validate.reps must be positive");
  if (val.variance_reps < 0) throw ConfigError("validate.variance_reps must be nonnegative");
  (void)cfg.plan();
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["model"] = to_string(model);
  j["kernel"] = to_string(kernel);
  j["L"] = order;
  const DebiasPlan p = plan();
  j["c"] = vector_json(p.c);
  j["alpha"] = alpha;
  j["B"] = B;
  j["contrast"] = contrast ? vector_json(*contrast) : nlohmann::json(nullptr);
  j["seed"] = seed;
  j["verbose"] = verbose;
  if (h) {
    j["h"] = *h;
    j["h_rule"] = nullptr;
  } else {
    const HRule rule = h_rule.value_or(HRule{});
    j["h"] = nullptr;
    j["h_rule"] = {{"constant", rule.constant}, {"kappa", rule.kappa}};
  }
  if (uses_dgp()) {
    j["data"] = nullptr;
    nlohmann::json g;
    g["n"] = dgp.n;
    g["k"] = dgp.k;
    g["d"] = dgp.d;
    g["gamma"] = to_string(dgp.gamma);
    g["theta0"] = vector_json(dgp.true_theta());
    g["error_scale"] = dgp.error_scale;
    g["w"] = dgp.w.kind == WDistribution::Kind::kGaussian ? "gaussian" : "uniform";
    g["w_a"] = dgp.w.a;
    g["w_b"] = dgp.w.b;
    g["x_loading"] = dgp.x_loading;
    g["x_noise"] = dgp.x_noise;
    g["intercept"] = dgp.intercept;
    j["dgp"] = g;
  } else {
    j["data"] = data_path;
    j["dgp"] = nullptr;
  }
  j["solver"] = {{"max_iter", solver.max_iter},
                 {"grad_tol", solver.grad_tol},
                 {"slack", solver.slack},
                 {"subgradient_iter", solver.subgradient_iter},
                 {"init", to_string(solver.init)},
                 {"seed_free", true}};
  j["validate"] = {{"reps", validate.reps},
                   {"variance_reps", validate.variance_reps},
                   {"h_grid", validate.h_grid},
                   {"mc_samples", validate.mc_samples},
                   {"coordinate", validate.coordinate},
                   {"band", band_json(validate.band)},
                   {"unscaled_band", band_json(validate.unscaled_band)},
                   {"scaled_band", band_json(validate.scaled_band)},
                   {"slope_band_base", band_json(validate.slope_band_base)},
                   {"slope_band_debiased", band_json(validate.slope_band_debiased)},
                   {"slope_gap_tol", validate.slope_gap_tol}};
  return j;
}

}  // namespace pairdiff

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pairdiff/config.hpp"
#include "pairdiff/error.hpp"
#include "pairdiff/experiments.hpp"

namespace {

using pairdiff::KeyValues;

struct Invocation {
  std::string command;
  std::string config_path;
  KeyValues flags;
  std::vector<std::string> sets;
};

void add_flag(CLI::App* app, Invocation& inv, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(name, [&inv, key](const std::string& v) { inv.flags.set(key, v); }, help);
}

void add_common(CLI::App* app, Invocation& inv, const std::string& command) {
  app->callback([&inv, command] { inv.command = command; });
  app->add_option("--config", inv.config_path, "key = value configuration file; flags override it");
  add_flag(app, inv, "--data", "data", "CSV with header y,x1..xk,w1..wd");
  add_flag(app, inv, "--model", "model", "plr, pll or plt");
  add_flag(app, inv, "--kernel", "kernel", "gaussian, epanechnikov or uniform");
  add_flag(app, inv, "--h", "h", "bandwidth");
  add_flag(app, inv, "--h-rule", "h_rule", "bandwidth rule 'C,kappa' giving h = C n^-kappa");
  add_flag(app, inv, "--L", "L", "debiasing order: 0, 2 or 4");
  add_flag(app, inv, "--c", "c", "comma-separated bandwidth multipliers, first entry 1");
  add_flag(app, inv, "--B", "B", "bootstrap replicates");
  add_flag(app, inv, "--alpha", "alpha", "one minus the confidence level");
  add_flag(app, inv, "--contrast", "contrast", "comma-separated contrast vector a");
  add_flag(app, inv, "--seed", "seed", "master seed");
  add_flag(app, inv, "--out", "out", "output path (JSON; CSV for simulate)");
  add_flag(app, inv, "--table", "table", "CSV table path (defaults next to --out)");
  app->add_flag_function("--verbose", [&inv](std::int64_t) { inv.flags.set("verbose", "true"); },
                         "include full solver records");
  app->add_option("--set", inv.sets, "extra key=value settings, e.g. dgp.n=300 or validate.reps=200");
}

int run(int argc, char** argv) {
  CLI::App app{"Kernel-weighted pairwise difference estimation and inference"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Invocation inv;
  add_common(app.add_subcommand("estimate", "point estimate (debiased when L > 0)"), inv, "estimate");
  add_common(app.add_subcommand("bootstrap-ci", "estimate plus bandwidth-rescaled bootstrap interval"), inv,
             "bootstrap-ci");
  add_common(app.add_subcommand("kernel-check", "moments of the jackknife equivalent kernel"), inv, "kernel-check");
  add_common(app.add_subcommand("simulate", "write a simulated dataset as CSV"), inv, "simulate");
  CLI::App* validate = app.add_subcommand("validate", "Monte Carlo validation studies");
  validate->require_subcommand(1);
  add_common(validate->add_subcommand("bias-order", "bias slope in log h for L = 0 and a debiased order"), inv,
             "bias-order");
  add_common(validate->add_subcommand("variance-match", "oracle variance formula against Monte Carlo"), inv,
             "variance-match");
  add_common(validate->add_subcommand("boot-inflation", "unscaled and rescaled bootstrap variance ratios"), inv,
             "boot-inflation");
  add_common(validate->add_subcommand("coverage", "empirical coverage of bootstrap intervals"), inv, "coverage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pairdiff::exit_code::kConfig;
  }

  KeyValues kv = inv.config_path.empty() ? KeyValues{} : KeyValues::load(inv.config_path);
  for (const std::string& s : inv.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw pairdiff::ConfigError("--set expects key=value, got '" + s + "'");
    inv.flags.set(s.substr(0, eq), s.substr(eq + 1));
  }
  kv.merge(inv.flags);
  kv.set("command", inv.command);
  const pairdiff::RunConfig cfg = pairdiff::parse_run_config(kv);
  const pairdiff::RunOutput out = pairdiff::run_command(cfg);
  pairdiff::write_outputs(out, cfg);
  if (out.verdict) {
    std::cerr << cfg.command << ": " << pairdiff::to_string(*out.verdict) << "\n";
    if (*out.verdict == pairdiff::Verdict::kFail) return pairdiff::exit_code::kVerdictFail;
    if (*out.verdict == pairdiff::Verdict::kInconclusive) return pairdiff::exit_code::kVerdictInconclusive;
  }
  return pairdiff::exit_code::kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pairdiff::ConfigError& e) {
    std::cerr << "pairdiff: configuration error: " << e.what() << "\n";
    return pairdiff::exit_code::kConfig;
  } catch (const pairdiff::IoError& e) {
    std::cerr << "pairdiff: I/O error: " << e.what() << "\n";
    return pairdiff::exit_code::kIo;
  } catch (const pairdiff::DataError& e) {
    std::cerr << "pairdiff: data error: " << e.what() << "\n";
    return pairdiff::exit_code::kData;
  } catch (const pairdiff::NumericalError& e) {
    std::cerr << "pairdiff: numerical failure: " << e.what() << "\n";
    return pairdiff::exit_code::kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "pairdiff: error: " << e.what() << "\n";
    return pairdiff::exit_code::kUnknown;
  }
}

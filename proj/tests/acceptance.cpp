// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only if all pass.
// A criterion number can be given on the command line to run a subset.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pairdiff/config.hpp"
#include "pairdiff/experiments.hpp"
#include "pairdiff/jackknife.hpp"
#include "pairdiff/kernel.hpp"
#include "probes.hpp"

namespace {

using namespace pairdiff;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

RunOutput run(const std::string& text) {
  const RunConfig cfg = parse_run_config(KeyValues::parse(text, "<acceptance>"));
  return run_command(cfg);
}

// Sum lambda = 1 and vanishing even moments on random multipliers; fixed (1, 2) case.
Outcome jackknife_weights() {
  const auto probe = testing::probe_jackknife(1000, 2024);
  const Vector fixed = solve_lambda(2, (Vector(2) << 1.0, 2.0).finished());
  const double fixed_err = std::max(std::abs(fixed[0] - 4.0 / 3.0), std::abs(fixed[1] + 1.0 / 3.0));
  const bool ok = probe.worst_sum <= 1e-12 && probe.worst_moment <= 1e-10 && fixed_err <= 1e-14;
  return {ok, "max|sum-1|=" + num(probe.worst_sum) + " max|moment|=" + num(probe.worst_moment) +
                  " fixed err=" + num(fixed_err)};
}

Outcome equivalent_kernel_order() {
  bool ok = true;
  std::ostringstream detail;
  for (KernelFamily family : {KernelFamily::kGaussian, KernelFamily::kEpanechnikov}) {
    for (int d = 1; d <= 2; ++d) {
      for (int order : {2, 4}) {
        const auto ek = equivalent_kernel(KernelSpec{family, d}, make_debias_plan(order));
        double mass_err = 0.0;
        double low = 0.0;
        double top = 0.0;
        for (const auto& m : moment_table(ek, order + 2)) {
          int total = 0;
          for (int v : m.alpha) total += v;
          if (total == 0) mass_err = std::abs(m.value - 1.0);
          if (total > 0 && total <= order + 1) low = std::max(low, std::abs(m.value));
          if (total == order + 2) top = std::max(top, std::abs(m.value));
        }
        const bool case_ok = mass_err <= 1e-6 && low <= 1e-6 && top > 1e-3;
        ok = ok && case_ok;
        detail << to_string(family) << "/d" << d << "/L" << order << (case_ok ? " ok" : " BAD") << "(top "
               << num(top) << ") ";
      }
    }
  }
  return {ok, detail.str()};
}

Outcome plr_closed_form() {
  const auto probe = testing::probe_plr_closed_form(200, 77);
  const bool ok = probe.worst_theta <= 1e-6 && probe.worst_objective <= 1e-12;
  return {ok, "instances=" + std::to_string(probe.instances) + " theta rel=" + num(probe.worst_theta) +
                  " objective rel=" + num(probe.worst_objective)};
}

Outcome score_correctness() {
  const auto plr = testing::probe_scores(ModelId::kPlr, 10000, 1);
  const auto pll = testing::probe_scores(ModelId::kPll, 10000, 2);
  const auto plt = testing::probe_scores(ModelId::kPlt, 10000, 3);
  const bool ok = plr.worst_fd <= 1e-7 && pll.worst_fd <= 1e-7 && plt.worst_inequality <= 1e-12 &&
                  plt.worst_fd <= 1e-8;
  return {ok, "plr fd=" + num(plr.worst_fd) + " pll fd=" + num(pll.worst_fd) + " plt ineq=" +
                  num(plt.worst_inequality) + " plt fd=" + num(plt.worst_fd) + " (" +
                  std::to_string(plt.smooth_points) + " smooth points)"};
}

Outcome plt_enumeration() {
  const auto probe = testing::probe_plt_enumeration(100, 55);
  const bool ok = probe.instances == 100 && probe.worst_value <= 1e-8 && probe.worst_theta <= 1e-8;
  return {ok, "instances=" + std::to_string(probe.instances) + " value err=" + num(probe.worst_value) +
                  " argmin dist=" + num(probe.worst_theta) + " unbounded skipped=" + std::to_string(probe.skipped)};
}

// Slopes are judged on the criterion bands only; the run's own verdict adds a gap check.
Outcome bias_order() {
  const RunOutput out = run(
      "command = bias-order\nmodel = plr\nkernel = gaussian\nL = 2\nseed = 6\n"
      "dgp.n = 4000\ndgp.k = 2\ndgp.gamma = sine_quadratic\ndgp.w = gaussian\ndgp.w_a = 10\ndgp.w_b = 5\n"
      "dgp.x_loading = 0.2\ndgp.error_scale = 0.3\n"
      "validate.reps = 400\nvalidate.h_grid = 1.6,1.13,0.8,0.57,0.4\n");
  const auto& curves = out.result.at("curves");
  const double s0 = curves[0].at("slope");
  const double s2 = curves[1].at("slope");
  const std::string st0 = curves[0].at("status");
  const std::string st2 = curves[1].at("status");
  const bool ok = st0 == "ok" && st2 == "ok" && s0 >= 1.6 && s0 <= 2.4 && s2 >= 3.2 && s2 <= 4.8;
  return {ok, "L=0 slope " + num(s0) + " (" + st0 + "), L=2 slope " + num(s2) + " (" + st2 + ")"};
}

Outcome boot_inflation() {
  const std::string design =
      "command = boot-inflation\nmodel = plr\nkernel = gaussian\nL = 0\nB = 400\nseed = 7\n"
      "dgp.n = 200\ndgp.d = 1\ndgp.w = gaussian\ndgp.w_a = 0\ndgp.w_b = 3\n"
      "validate.reps = 400\nvalidate.variance_reps = 2000\n";
  const RunOutput small = run(design + "h = 0.005\nvalidate.unscaled_band = 2,4\nvalidate.scaled_band = 0.7,1.4\n");
  const RunOutput linear = run(design + "h = 0.25\nvalidate.unscaled_band = 0.8,1.3\n");
  const double ru = small.result.at("r_unscaled");
  const double rs = small.result.at("r_scaled");
  const double rl = linear.result.at("r_unscaled");
  const bool ok = ru >= 2.0 && ru <= 4.0 && rs >= 0.7 && rs <= 1.4 && rl >= 0.8 && rl <= 1.3;
  return {ok, "nh=1: unscaled " + num(ru) + " (formula " + num(small.result.at("formula_ratio")) + "), rescaled " +
                  num(rs) + "; nh=50: unscaled " + num(rl)};
}

Outcome coverage() {
  bool ok = true;
  std::ostringstream detail;
  auto one = [&](const std::string& model, const std::string& kernel, int order, double alpha, int reps, double lo,
                 double hi) {
    std::ostringstream cfg;
    cfg << "command = coverage\nmodel = " << model << "\nkernel = " << kernel << "\nL = " << order
        << "\nalpha = " << alpha << "\nB = 299\nh_rule = 1,0.3333333333333333\nseed = 8\n"
        << "dgp.n = 300\ndgp.d = 1\ndgp.k = 1\nvalidate.reps = " << reps << "\nvalidate.band = " << lo << "," << hi
        << "\n";
    const RunOutput out = run(cfg.str());
    const double c = out.result.at("coverage");
    const bool pass = c >= lo && c <= hi;
    ok = ok && pass;
    detail << model << " L=" << order << " " << num(1.0 - alpha) << ": " << num(c) << (pass ? "" : " OUT") << "; ";
  };
  for (int order : {0, 2}) {
    one("plr", "gaussian", order, 0.05, 500, 0.92, 0.98);
    const double se80 = std::sqrt(0.8 * 0.2 / 500.0);
    one("plr", "gaussian", order, 0.20, 500, 0.8 - 3.0 * se80, 0.8 + 3.0 * se80);
  }
  for (int order : {0, 2}) {
    one("pll", "epanechnikov", order, 0.05, 200, 0.90, 0.99);
    one("plt", "epanechnikov", order, 0.05, 200, 0.90, 0.99);
  }
  return {ok, detail.str()};
}

Outcome variance_match() {
  const RunOutput out = run(
      "command = variance-match\nmodel = plr\nkernel = gaussian\nL = 0\nseed = 9\n"
      "dgp.n = 500\ndgp.d = 1\ndgp.k = 2\ndgp.w = gaussian\n"
      "validate.reps = 1000\nvalidate.h_grid = 0.1,0.004\nvalidate.band = 0.7,1.4\n");
  bool ok = true;
  std::ostringstream detail;
  for (const auto& row : out.result.at("rows")) {
    detail << "nh=" << num(row.at("nhd")) << " ratios";
    for (double r : row.at("ratio")) {
      ok = ok && r >= 0.7 && r <= 1.4;
      detail << " " << num(r);
    }
    detail << "; ";
  }
  return {ok, detail.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs every CLI command twice, single-threaded and with many workers, and
// compares the emitted JSON and CSV byte for byte.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pairdiff_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = PAIRDIFF_CLI;
  const int many = std::max(8, static_cast<int>(std::thread::hardware_concurrency()));
  const std::string data = (dir / "data.csv").string();
  const std::string setup = cli + " simulate --seed 3 --set dgp.n=150 --set dgp.k=2 --out " + data + " > " +
                            (dir / "sim.json").string();
  if (std::system(setup.c_str()) != 0) return {false, "simulate failed"};

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate --seed 4 --set dgp.n=80 --out @.csv"},
      {"estimate", "estimate --data " + data + " --L 2 --h 0.5 --out @.json"},
      {"estimate_plt", "estimate --model plt --set dgp.n=120 --L 2 --h 0.5 --out @.json"},
      {"bootstrap", "bootstrap-ci --data " + data + " --L 2 --h 0.5 --B 60 --verbose --out @.json"},
      {"bootstrap_pll", "bootstrap-ci --model pll --set dgp.n=100 --h 0.8 --B 40 --out @.json"},
      {"kernel", "kernel-check --kernel epanechnikov --L 4 --set dgp.d=2 --out @.json"},
      {"bias", "validate bias-order --set dgp.n=200 --set validate.reps=10 --set validate.h_grid=1.6,0.8,0.4 --out @.json"},
      {"variance", "validate variance-match --set dgp.n=100 --set validate.reps=100 --set validate.mc_samples=2000 "
                   "--out @.json"},
      {"inflation", "validate boot-inflation --set dgp.n=60 --h 0.1 --B 20 --set validate.reps=6 "
                    "--set validate.variance_reps=30 --set validate.scaled_band=0.5,2 --out @.json"},
      {"coverage", "validate coverage --model plt --kernel epanechnikov --set dgp.n=60 --B 20 --set validate.reps=6 "
                   "--out @.json"},
  };
  std::ostringstream detail;
  bool ok = true;
  int compared = 0;
  for (const auto& [name, args] : commands) {
    std::vector<std::string> outputs;
    for (const std::string threads : {std::string("1"), std::to_string(many), std::to_string(many)}) {
      const std::string stem = (dir / (name + "_" + std::to_string(outputs.size()))).string();
      std::string a = args;
      a.replace(a.find('@'), 1, stem);
      const std::string cmd = "PAIRDIFF_THREADS=" + threads + " " + cli + " " + a + " > " + stem + ".stdout 2> " +
                              stem + ".stderr";
      const int rc = std::system(cmd.c_str());
      // Validation verdicts on tiny designs may fail; only errors other than 6 and 7 count.
      const int status = WEXITSTATUS(rc);
      if (status != 0 && status != 6 && status != 7) {
        ok = false;
        detail << name << " exit " << status << "; ";
      }
      std::string bytes;
      for (const char* ext : {".json", ".csv", ".stdout"}) {
        const fs::path p = stem + ext;
        if (fs::exists(p)) bytes += std::string(ext) + ":" + slurp(p);
      }
      outputs.push_back(bytes);
    }
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && !outputs[0].empty();
    ++compared;
    if (!same) {
      ok = false;
      detail << name << " differs; ";
    }
  }
  detail << compared << " commands compared at 1 and " << many << " workers";
  return {ok, detail.str()};
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  ///< hard limit where one is stated, 0 otherwise
  std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "jackknife weights", 1.0, jackknife_weights},
      {2, "equivalent kernel order", 30.0, equivalent_kernel_order},
      {3, "PLR closed form vs generic solver", 60.0, plr_closed_form},
      {4, "score correctness", 60.0, score_correctness},
      {5, "PLT solver vs breakpoint enumeration", 30.0, plt_enumeration},
      {6, "bias order", 0.0, bias_order},
      {7, "bootstrap variance inflation", 0.0, boot_inflation},
      {8, "bootstrap coverage", 0.0, coverage},
      {9, "variance formula", 0.0, variance_match},
      {10, "determinism", 0.0, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = c.body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds >= c.budget_seconds) {
      outcome.pass = false;
      outcome.detail += " over time budget";
    }
    if (!outcome.pass) ++failures;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (outcome.pass ? "PASS" : "FAIL") << " ("
              << num(seconds) << " s) " << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

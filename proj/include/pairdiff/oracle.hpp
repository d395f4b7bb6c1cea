#pragma once

#include <string>
#include <vector>

#include "pairdiff/dgp.hpp"
#include "pairdiff/jackknife.hpp"
#include "pairdiff/kernel.hpp"
#include "pairdiff/rng.hpp"

namespace pairdiff {

/// Gamma0 = E[G0(w)], Sigma0 = E[xi0 xi0'], Xi0 = E[Xi0(w)] with Monte Carlo
/// standard errors (zero for the analytic route). Delta0(K) = Xi0 * \int K^2.
struct OracleComponents {
  Matrix gamma;
  Matrix sigma;
  Matrix xi;
  Matrix gamma_se;
  Matrix sigma_se;
  Matrix xi_se;
  double roughness = 0.0;  ///< \int K^2 for the base kernel, by quadrature
  long samples = 0;

  Matrix delta(double roughness_value) const { return xi * roughness_value; }
};

/// Monte Carlo over the known PLR design: G0(w) = 2 V[x|w] f(w),
/// xi0(z) = -2 (x - E[x|w]) eps f(w), and Xi0(w) = E[s s' | w1 = w2 = w] f(w)
/// from pairs drawn at a common w. Standard errors by 10 batch means.
/// Throws ConfigError for non-PLR designs or mc_samples < 10.
OracleComponents oracle_components_plr(const DgpConfig& dgp, const KernelSpec& spec, long mc_samples, Rng& rng);

/// Closed form for the same design using E[f(w)] and E[f(w)^2] of the
/// Gaussian or uniform w distribution.
OracleComponents oracle_components_plr_analytic(const DgpConfig& dgp, const KernelSpec& spec);

enum class VarianceKind { kV, kVbar, kVbarStar };
std::string to_string(VarianceKind kind);
VarianceKind parse_variance_kind(std::string_view name);

/// Gamma^{-1} [Sigma / n + m C(n,2)^{-1} h^{-d} Xi R] Gamma^{-1} with m = 3 for
/// kVbarStar and 1 otherwise; R = \int K^2 of ek.base for kV and \int Kbar^2 else.
Matrix variance_formula(const OracleComponents& components, double n, double h, int d, VarianceKind kind,
                        const EquivalentKernel& ek);

struct SamplingVariance {
  Matrix covariance;
  Matrix covariance_se;  ///< batch-means standard error per entry
  Vector mean;
  int reps = 0;
  int failures = 0;
};

/// Covariance of the debiased estimate over independent datasets drawn on
/// streams (dgp.seed, {data, r}). Fails when more than 5% of solves fail.
SamplingVariance empirical_sampling_variance(const DgpConfig& dgp, const KernelSpec& spec, double h,
                                             const DebiasPlan& plan, int reps, int threads = 0);

enum class CurveStatus { kOk, kInconclusive };
std::string to_string(CurveStatus status);

struct BiasCurve {
  int order = 0;
  std::vector<double> h;             ///< strictly decreasing
  std::vector<Vector> bias;          ///< MC mean of estimate - theta0
  std::vector<Vector> se;            ///< batch-means standard error
  std::vector<bool> qualifying;      ///< |bias| > 3 se on the fitted coordinate
  int coordinate = 0;
  double slope = 0.0;                ///< least squares of log|bias| on log h over qualifying points
  double intercept = 0.0;
  CurveStatus status = CurveStatus::kInconclusive;
  int reps = 0;
};

/// Bias curves for several plans from one set of replicates: every replicate
/// solves once at each distinct bandwidth c_l h, so the curves share noise.
std::vector<BiasCurve> bias_curves(const DgpConfig& dgp, const KernelSpec& spec, const std::vector<DebiasPlan>& plans,
                                   const std::vector<double>& h_grid, int reps, int coordinate = 0, int threads = 0);

BiasCurve bias_curve(const DgpConfig& dgp, const KernelSpec& spec, const DebiasPlan& plan,
                     const std::vector<double>& h_grid, int reps, int coordinate = 0, int threads = 0);

/// Least-squares fit of log|bias| on log h over the qualifying points; sets
/// status to inconclusive when fewer than two points qualify.
void fit_bias_slope(BiasCurve& curve);

}  // namespace pairdiff

#include "pairdiff/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Cholesky>

#include "pairdiff/error.hpp"
#include "pairdiff/inference.hpp"
#include "pairdiff/parallel.hpp"

namespace pairdiff {

namespace {

constexpr int kBatches = 10;

void require_plr(const DgpConfig& dgp) {
  if (dgp.model != ModelId::kPlr) throw ConfigError("the variance oracle is implemented for PLR designs only");
  dgp.validate();
}

/// Mean and batch-means standard error of a stream of k-by-k samples.
class BatchMeans {
 public:
  BatchMeans(Eigen::Index k, long per_batch) : per_batch_(per_batch) {
    for (int b = 0; b < kBatches; ++b) batch_[b] = Matrix::Zero(k, k);
  }
  void add(long index, const Matrix& sample) { batch_[index / per_batch_] += sample; }
  Matrix mean() const {
    Matrix m = Matrix::Zero(batch_[0].rows(), batch_[0].cols());
    for (const Matrix& b : batch_) m += b / static_cast<double>(per_batch_);
    return m / kBatches;
  }
  Matrix se() const {
    const Matrix m = mean();
    Matrix v = Matrix::Zero(m.rows(), m.cols());
    for (const Matrix& b : batch_) {
      const Matrix dev = b / static_cast<double>(per_batch_) - m;
      v += dev.cwiseProduct(dev);
    }
    return (v / (kBatches - 1) / kBatches).cwiseSqrt();
  }

 private:
  long per_batch_;
  Matrix batch_[kBatches];
};

double draw_w(const WDistribution& dist, Rng& rng, std::normal_distribution<double>& normal,
              std::uniform_real_distribution<double>& unit) {
  return dist.kind == WDistribution::Kind::kGaussian ? dist.a + dist.b * normal(rng)
                                                     : dist.a + (dist.b - dist.a) * unit(rng);
}

}  // namespace

OracleComponents oracle_components_plr(const DgpConfig& dgp, const KernelSpec& spec, long mc_samples, Rng& rng) {
  require_plr(dgp);
  if (mc_samples < kBatches) throw ConfigError("oracle needs at least 10 Monte Carlo samples");
  const Eigen::Index k = dgp.k;
  const long per_batch = mc_samples / kBatches;
  const long total = per_batch * kBatches;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  BatchMeans gamma(k, per_batch);
  BatchMeans sigma(k, per_batch);
  BatchMeans xi(k, per_batch);
  Vector w(dgp.d);
  Vector x1(k);
  Vector x2(k);
  const Matrix eye = Matrix::Identity(k, k);
  for (long s = 0; s < total; ++s) {
    for (int j = 0; j < dgp.d; ++j) w[j] = draw_w(dgp.w, rng, normal, unit);
    const double f = w_density(dgp, w);
    const Vector mx = conditional_mean_x(dgp, w);
    // H(w, w) = E[(x1 - x2)(x1 - x2)' | w1 = w2 = w] = 2 V[x | w].
    gamma.add(s, 2.0 * dgp.x_noise * dgp.x_noise * f * eye);
    for (Eigen::Index j = 0; j < k; ++j) x1[j] = mx[j] + dgp.x_noise * normal(rng);
    for (Eigen::Index j = 0; j < k; ++j) x2[j] = mx[j] + dgp.x_noise * normal(rng);
    const double e1 = dgp.error_scale * normal(rng);
    const double e2 = dgp.error_scale * normal(rng);
    // xi0(z) = 2 E[s(z, z2; theta0) | z1 = z, w2 = w] f(w) = -2 (x - E[x|w]) eps f(w).
    const Vector xi0 = -2.0 * (x1 - mx) * e1 * f;
    sigma.add(s, xi0 * xi0.transpose());
    // s at w1 = w2: gamma0 cancels, the residual difference is e1 - e2.
    const Vector pair_score = -(x1 - x2) * (e1 - e2);
    xi.add(s, pair_score * pair_score.transpose() * f);
  }
  OracleComponents out;
  out.gamma = gamma.mean();
  out.sigma = sigma.mean();
  out.xi = xi.mean();
  out.gamma_se = gamma.se();
  out.sigma_se = sigma.se();
  out.xi_se = xi.se();
  out.roughness = roughness_by_quadrature(as_equivalent_kernel(spec)).value;
  out.samples = total;
  return out;
}

OracleComponents oracle_components_plr_analytic(const DgpConfig& dgp, const KernelSpec& spec) {
  require_plr(dgp);
  double ef = 1.0;
  double ef2 = 1.0;
  for (int j = 0; j < dgp.d; ++j) {
    if (dgp.w.kind == WDistribution::Kind::kGaussian) {
      ef *= 1.0 / (2.0 * std::sqrt(std::numbers::pi) * dgp.w.b);
      ef2 *= 1.0 / (2.0 * std::numbers::pi * std::sqrt(3.0) * dgp.w.b * dgp.w.b);
    } else {
      const double width = dgp.w.b - dgp.w.a;
      ef *= 1.0 / width;
      ef2 *= 1.0 / (width * width);
    }
  }
  const double s2 = dgp.x_noise * dgp.x_noise;
  const double e2 = dgp.error_scale * dgp.error_scale;
  const Matrix eye = Matrix::Identity(dgp.k, dgp.k);
  OracleComponents out;
  out.gamma = 2.0 * s2 * ef * eye;
  out.sigma = 4.0 * s2 * e2 * ef2 * eye;
  out.xi = 4.0 * s2 * e2 * ef * eye;
  out.gamma_se = Matrix::Zero(dgp.k, dgp.k);
  out.sigma_se = out.gamma_se;
  out.xi_se = out.gamma_se;
  out.roughness = kernel_roughness(spec);
  return out;
}

std::string to_string(VarianceKind kind) {
  switch (kind) {
    case VarianceKind::kV:
      return "V";
    case VarianceKind::kVbar:
      return "Vbar";
    case VarianceKind::kVbarStar:
      return "Vbar_star";
  }
  return "unknown";
}

VarianceKind parse_variance_kind(std::string_view name) {
  if (name == "V") return VarianceKind::kV;
  if (name == "Vbar") return VarianceKind::kVbar;
  if (name == "Vbar_star") return VarianceKind::kVbarStar;
  throw ConfigError("unknown variance kind '" + std::string(name) + "' (expected V, Vbar or Vbar_star)");
}

Matrix variance_formula(const OracleComponents& components, double n, double h, int d, VarianceKind kind,
                        const EquivalentKernel& ek) {
  if (!(n > 1.0)) throw ConfigError("variance formula needs n > 1");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("variance formula needs h > 0");
  const double roughness =
      kind == VarianceKind::kV ? kernel_roughness(ek.base) : equivalent_kernel_roughness(ek);
  const double multiplier = kind == VarianceKind::kVbarStar ? 3.0 : 1.0;
  const double pairs = 0.5 * n * (n - 1.0);
  const Matrix middle =
      components.sigma / n + (multiplier / (pairs * std::pow(h, d))) * components.delta(roughness);
  const Eigen::LLT<Matrix> llt(components.gamma);
  if (llt.info() != Eigen::Success) throw NumericalError("Gamma0 is not positive definite");
  const Matrix ginv = llt.solve(Matrix::Identity(components.gamma.rows(), components.gamma.cols()));
  const Matrix v = ginv * middle * ginv;
  return 0.5 * (v + v.transpose());
}

namespace {

/// Per-replicate estimates at every bandwidth in `hs`; failed replicates stay empty.
std::vector<std::optional<std::vector<Vector>>> replicate_estimates(const DgpConfig& dgp, const KernelSpec& spec,
                                                                    const std::vector<double>& hs, int reps,
                                                                    int threads, int& failures) {
  const PairwiseModel model(dgp.model);
  std::vector<std::optional<std::vector<Vector>>> out(static_cast<std::size_t>(reps));
  parallel_for(
      static_cast<std::size_t>(reps),
      [&](std::size_t r) {
        Rng rng = make_stream(dgp.seed, {stream::kData, r});
        const Dataset data = generate(dgp, rng);
        try {
          out[r] = estimates_at_bandwidths(data, model, spec, hs);
        } catch (const NumericalError&) {
          // Counted below.
        }
      },
      threads);
  failures = 0;
  for (const auto& o : out) failures += o ? 0 : 1;
  if (failures > 0.05 * reps) {
    throw NumericalError(std::to_string(failures) + " of " + std::to_string(reps) +
                         " Monte Carlo replicates failed to solve");
  }
  return out;
}

/// Index of each c_l h in the sorted list of distinct bandwidths.
std::vector<double> collect_bandwidths(const std::vector<DebiasPlan>& plans, const std::vector<double>& hs) {
  std::vector<double> all;
  for (const DebiasPlan& p : plans) {
    for (double h : hs) {
      for (Eigen::Index l = 0; l < p.levels(); ++l) all.push_back(p.c[l] * h);
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::size_t position(const std::vector<double>& sorted, double v) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

Vector combine_at(const std::vector<Vector>& estimates, const std::vector<double>& bandwidths, const DebiasPlan& plan,
                  double h) {
  std::vector<Vector> levels;
  for (Eigen::Index l = 0; l < plan.levels(); ++l) levels.push_back(estimates[position(bandwidths, plan.c[l] * h)]);
  return plan.levels() == 1 ? levels.front() : debias_combine(levels, plan);
}

}  // namespace

SamplingVariance empirical_sampling_variance(const DgpConfig& dgp, const KernelSpec& spec, double h,
                                             const DebiasPlan& plan, int reps, int threads) {
  if (reps < 100) throw ConfigError("empirical sampling variance needs at least 100 replicates");
  if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
  dgp.validate();
  const std::vector<double> bandwidths = collect_bandwidths({plan}, {h});
  SamplingVariance out;
  const auto est = replicate_estimates(dgp, spec, bandwidths, reps, threads, out.failures);
  std::vector<Vector> thetas;
  for (const auto& e : est) {
    if (e) thetas.push_back(combine_at(*e, bandwidths, plan, h));
  }
  const Eigen::Index k = dgp.k;
  const std::size_t m = thetas.size();
  out.reps = static_cast<int>(m);
  out.mean = Vector::Zero(k);
  for (const Vector& t : thetas) out.mean += t;
  out.mean /= static_cast<double>(m);
  out.covariance = Matrix::Zero(k, k);
  for (const Vector& t : thetas) out.covariance += (t - out.mean) * (t - out.mean).transpose();
  out.covariance /= static_cast<double>(m - 1);
  // Batch means over contiguous replicate blocks.
  const std::size_t per = m / kBatches;
  Matrix acc = Matrix::Zero(k, k);
  std::vector<Matrix> batch;
  for (int b = 0; b < kBatches; ++b) {
    Matrix c = Matrix::Zero(k, k);
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) c += (thetas[i] - out.mean) * (thetas[i] - out.mean).transpose();
    batch.push_back(c / static_cast<double>(per));
  }
  Matrix bm = Matrix::Zero(k, k);
  for (const Matrix& c : batch) bm += c / kBatches;
  for (const Matrix& c : batch) acc += (c - bm).cwiseProduct(c - bm);
  out.covariance_se = (acc / (kBatches - 1) / kBatches).cwiseSqrt();
  return out;
}

std::string to_string(CurveStatus status) { return status == CurveStatus::kOk ? "ok" : "inconclusive"; }

void fit_bias_slope(BiasCurve& curve) {
  std::vector<double> lx;
  std::vector<double> ly;
  curve.qualifying.assign(curve.h.size(), false);
  for (std::size_t g = 0; g < curve.h.size(); ++g) {
    const double b = curve.bias[g][curve.coordinate];
    curve.qualifying[g] = std::abs(b) > 3.0 * curve.se[g][curve.coordinate];
    if (!curve.qualifying[g]) continue;
    lx.push_back(std::log(curve.h[g]));
    ly.push_back(std::log(std::abs(curve.bias[g][curve.coordinate])));
  }
  if (lx.size() < 2) {
    curve.status = CurveStatus::kInconclusive;
    curve.slope = 0.0;
    curve.intercept = 0.0;
    return;
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / m;
    my += ly[i] / m;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  curve.slope = sxy / sxx;
  curve.intercept = my - curve.slope * mx;
  curve.status = CurveStatus::kOk;
}

std::vector<BiasCurve> bias_curves(const DgpConfig& dgp, const KernelSpec& spec, const std::vector<DebiasPlan>& plans,
                                   const std::vector<double>& h_grid, int reps, int coordinate, int threads) {
  dgp.validate();
  if (h_grid.empty()) throw ConfigError("bias curve needs a nonempty bandwidth grid");
  for (std::size_t g = 0; g < h_grid.size(); ++g) {
    if (!(h_grid[g] > 0.0)) throw ConfigError("bias curve bandwidths must be positive");
    if (g > 0 && !(h_grid[g] < h_grid[g - 1])) throw ConfigError("bias curve grid must be strictly decreasing");
  }
  if (reps < kBatches) throw ConfigError("bias curve needs at least 10 replicates");
  if (coordinate < 0 || coordinate >= dgp.k) throw ConfigError("bias coordinate out of range");
  const Vector theta0 = dgp.true_theta();
  const std::vector<double> bandwidths = collect_bandwidths(plans, h_grid);
  int failures = 0;
  const auto est = replicate_estimates(dgp, spec, bandwidths, reps, threads, failures);

  std::vector<BiasCurve> curves;
  for (const DebiasPlan& plan : plans) {
    BiasCurve curve;
    curve.order = plan.order;
    curve.h = h_grid;
    curve.coordinate = coordinate;
    for (double h : h_grid) {
      std::vector<Vector> errors;
      for (const auto& e : est) {
        if (e) errors.push_back(combine_at(*e, bandwidths, plan, h) - theta0);
      }
      const std::size_t m = errors.size();
      const std::size_t per = m / kBatches;
      Vector mean = Vector::Zero(dgp.k);
      for (const Vector& v : errors) mean += v;
      mean /= static_cast<double>(m);
      std::vector<Vector> batch;
      for (int b = 0; b < kBatches; ++b) {
        Vector s = Vector::Zero(dgp.k);
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += errors[i];
        batch.push_back(s / static_cast<double>(per));
      }
      Vector bm = Vector::Zero(dgp.k);
      for (const Vector& v : batch) bm += v / kBatches;
      Vector var = Vector::Zero(dgp.k);
      for (const Vector& v : batch) var += (v - bm).cwiseProduct(v - bm);
      const Vector se = (var / (kBatches - 1) / kBatches).cwiseSqrt();
      curve.bias.push_back(mean);
      curve.se.push_back(se);
    }
    curve.reps = static_cast<int>(reps - failures);
    fit_bias_slope(curve);
    curves.push_back(std::move(curve));
  }
  return curves;
}

BiasCurve bias_curve(const DgpConfig& dgp, const KernelSpec& spec, const DebiasPlan& plan,
                     const std::vector<double>& h_grid, int reps, int coordinate, int threads) {
  return bias_curves(dgp, spec, {plan}, h_grid, reps, coordinate, threads).front();
}

}  // namespace pairdiff

#include "pairdiff/dgp.hpp"

#include <cmath>
#include <numbers>

#include "pairdiff/error.hpp"

namespace pairdiff {

GammaShape parse_gamma_shape(std::string_view name) {
  if (name == "sine_quadratic") return GammaShape::kSineQuadratic;
  if (name == "sine") return GammaShape::kSine;
  if (name == "quadratic") return GammaShape::kQuadratic;
  if (name == "zero") return GammaShape::kZero;
  throw ConfigError("unknown gamma shape '" + std::string(name) + "' (expected sine_quadratic, sine, quadratic, zero)");
}

std::string to_string(GammaShape shape) {
  switch (shape) {
    case GammaShape::kSineQuadratic:
      return "sine_quadratic";
    case GammaShape::kSine:
      return "sine";
    case GammaShape::kQuadratic:
      return "quadratic";
    case GammaShape::kZero:
      return "zero";
  }
  return "unknown";
}

Vector DgpConfig::true_theta() const {
  if (theta0.size() == 0) {
    static const double defaults[] = {1.0, -0.5, 0.25};
    if (k < 1 || k > 3) throw ConfigError("default theta0 is only defined for k <= 3; set dgp.theta0");
    return Eigen::Map<const Vector>(defaults, k);
  }
  if (theta0.size() != k) throw ConfigError("dgp.theta0 has " + std::to_string(theta0.size()) + " entries, k=" + std::to_string(k));
  return theta0;
}

void DgpConfig::validate() const {
  if (n < 2) throw ConfigError("dgp.n must be at least 2 (got " + std::to_string(n) + ")");
  if (k < 1 || d < 1) throw ConfigError("dgp.k and dgp.d must be positive");
  if (!(error_scale > 0.0)) throw ConfigError("dgp.error_scale must be positive");
  if (!(x_noise > 0.0)) throw ConfigError("dgp.x_noise must be positive");
  if (w.kind == WDistribution::Kind::kGaussian && !(w.b > 0.0)) throw ConfigError("gaussian w needs a positive sd");
  if (w.kind == WDistribution::Kind::kUniform && !(w.b > w.a)) throw ConfigError("uniform w needs a < b");
  (void)true_theta();
}

double gamma0(GammaShape shape, double w1) {
  switch (shape) {
    case GammaShape::kSineQuadratic:
      return std::sin(std::numbers::pi * w1) + 0.5 * w1 * w1;
    case GammaShape::kSine:
      return std::sin(std::numbers::pi * w1);
    case GammaShape::kQuadratic:
      return 0.5 * w1 * w1;
    case GammaShape::kZero:
      return 0.0;
  }
  return 0.0;
}

double w_density(const DgpConfig& cfg, const Eigen::Ref<const Vector>& w) {
  double f = 1.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (cfg.w.kind == WDistribution::Kind::kGaussian) {
      const double z = (w[j] - cfg.w.a) / cfg.w.b;
      f *= std::exp(-0.5 * z * z) / (cfg.w.b * std::sqrt(2.0 * std::numbers::pi));
    } else {
      f *= (w[j] >= cfg.w.a && w[j] <= cfg.w.b) ? 1.0 / (cfg.w.b - cfg.w.a) : 0.0;
    }
  }
  return f;
}

Vector conditional_mean_x(const DgpConfig& cfg, const Eigen::Ref<const Vector>& w) {
  return Vector::Constant(cfg.k, cfg.x_loading * w[0]);
}

Dataset generate(const DgpConfig& cfg, Rng& rng) {
  cfg.validate();
  const Vector theta0 = cfg.true_theta();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Vector y(cfg.n);
  RowMatrix x(cfg.n, cfg.k);
  RowMatrix w(cfg.n, cfg.d);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.d; ++j) {
      w(i, j) = cfg.w.kind == WDistribution::Kind::kGaussian ? cfg.w.a + cfg.w.b * normal(rng)
                                                               : cfg.w.a + (cfg.w.b - cfg.w.a) * unit(rng);
    }
    for (int j = 0; j < cfg.k; ++j) x(i, j) = cfg.x_loading * w(i, 0) + cfg.x_noise * normal(rng);
    double eps = 0.0;
    if (cfg.model == ModelId::kPll) {
      double p = unit(rng);
      while (p <= 0.0) p = unit(rng);
      eps = std::log(p / (1.0 - p));
    } else {
      eps = cfg.error_scale * normal(rng);
    }
    const double index = x.row(i).dot(theta0) + gamma0(cfg.gamma, w(i, 0)) + cfg.intercept + eps;
    switch (cfg.model) {
      case ModelId::kPlr:
        y[i] = index;
        break;
      case ModelId::kPll:
        y[i] = index >= 0.0 ? 1.0 : 0.0;
        break;
      case ModelId::kPlt:
        y[i] = std::max(index, 0.0);
        break;
    }
  }
  return Dataset(std::move(y), std::move(x), std::move(w));
}

Dataset generate(const DgpConfig& cfg) {
  Rng rng = make_stream(cfg.seed, {stream::kData});
  return generate(cfg, rng);
}

}  // namespace pairdiff

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pairdiff/data.hpp"
#include "pairdiff/models.hpp"
#include "pairdiff/rng.hpp"

namespace pairdiff {

/// Shape of the nuisance function gamma_0, evaluated at w_1.
enum class GammaShape { kSineQuadratic, kSine, kQuadratic, kZero };

GammaShape parse_gamma_shape(std::string_view name);
std::string to_string(GammaShape shape);

/// Coordinates of w are i.i.d.: N(a, b^2) for kGaussian, U[a, b] for kUniform.
struct WDistribution {
  enum class Kind { kGaussian, kUniform };
  Kind kind = Kind::kGaussian;
  double a = 0.0;
  double b = 1.0;
};

/// Synthetic design with known truth:
///   x = x_loading * w_1 * 1_k + nu,  nu ~ N(0, x_noise^2 I_k)
///   index = x'theta0 + gamma0(w_1) + intercept + eps
///   PLR: y = index, eps ~ N(0, error_scale^2)
///   PLL: y = 1{index >= 0}, eps standard logistic
///   PLT: y = max(index, 0), eps ~ N(0, error_scale^2)
struct DgpConfig {
  ModelId model = ModelId::kPlr;
  int n = 500;
  int k = 1;
  int d = 1;
  GammaShape gamma = GammaShape::kSineQuadratic;
  Vector theta0;  ///< empty means the first k entries of (1, -0.5, 0.25)
  double error_scale = 1.0;
  WDistribution w;
  double x_loading = 1.0;
  double x_noise = 1.0;
  double intercept = 0.0;
  std::uint64_t seed = 1;

  /// theta0 with the default filled in and its length checked against k.
  Vector true_theta() const;
  /// Throws ConfigError on n < 2, nonpositive scales or shape mismatches.
  void validate() const;
};

double gamma0(GammaShape shape, double w1);

/// Density of w (product over coordinates).
double w_density(const DgpConfig& cfg, const Eigen::Ref<const Vector>& w);

/// E[x | w] under the design above.
Vector conditional_mean_x(const DgpConfig& cfg, const Eigen::Ref<const Vector>& w);

/// Draws one dataset from `rng`; the draw order is fixed per observation
/// (w, then nu, then eps), so identical streams give identical data.
Dataset generate(const DgpConfig& cfg, Rng& rng);

/// generate() on the stream derived from cfg.seed.
Dataset generate(const DgpConfig& cfg);

}  // namespace pairdiff

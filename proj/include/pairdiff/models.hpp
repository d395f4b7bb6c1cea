#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "pairdiff/data.hpp"
#include "pairdiff/types.hpp"

namespace pairdiff {

enum class ModelId { kPlr, kPll, kPlt };
enum class Smoothness { kQuadratic, kSmooth, kPiecewiseLinear };

ModelId parse_model_id(std::string_view name);
std::string to_string(ModelId id);

// Every pairwise loss depends on theta only through the index u = (x_i - x_j)'theta,
// so each model is a scalar function of (y_i, y_j, u); the score is
// (x_i - x_j) * dloss.

/// Partially linear regression: 1/2 (dy - u)^2.
struct PlrLoss {
  static constexpr ModelId id = ModelId::kPlr;
  static constexpr Smoothness smoothness = Smoothness::kQuadratic;
  static double loss(double yi, double yj, double u) {
    const double r = (yi - yj) - u;
    return 0.5 * r * r;
  }
  static double dloss(double yi, double yj, double u) { return -((yi - yj) - u); }
  static double d2loss(double, double, double) { return 1.0; }
};

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

/// Logistic cdf Lambda(u), stable for large |u|.
inline double logistic_cdf(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// Partially linear logit: conditional logit likelihood over discordant pairs.
struct PllLoss {
  static constexpr ModelId id = ModelId::kPll;
  static constexpr Smoothness smoothness = Smoothness::kSmooth;
  static double loss(double yi, double yj, double u) {
    if (yi == yj) return 0.0;
    // -ln Lambda(u) = softplus(-u), -ln Lambda(-u) = softplus(u)
    return yi * softplus(-u) + yj * softplus(u);
  }
  static double dloss(double yi, double yj, double u) {
    if (yi == yj) return 0.0;
    return -(yi - logistic_cdf(u));
  }
  static double d2loss(double yi, double yj, double u) {
    if (yi == yj) return 0.0;
    const double p = logistic_cdf(u);
    return p * (1.0 - p);
  }
  /// loss, dloss and d2loss from a single exp and log1p; discordant pairs only.
  static void terms(double yi, double u, double& l, double& dl, double& d2l) {
    const double e = std::exp(-std::abs(u));
    const double tail = std::log1p(e);
    const double p = u >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    // yi = 1: softplus(-u); yi = 0 (so yj = 1): softplus(u).
    l = (yi == 1.0 ? std::max(-u, 0.0) : std::max(u, 0.0)) + tail;
    dl = -(yi - p);
    d2l = p * (1.0 - p);
  }
};

/// Kink location and one-sided slopes of a piecewise-linear pair loss.
struct Kink {
  bool present = false;
  double at = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
};

/// Partially linear Tobit (censoring at zero), normalized so that m(theta = 0) = 0.
struct PltLoss {
  static constexpr ModelId id = ModelId::kPlt;
  static constexpr Smoothness smoothness = Smoothness::kPiecewiseLinear;
  static double loss(double yi, double yj, double u) {
    if (yi > 0.0 && yj > 0.0) {
      const double dy = yi - yj;
      return std::abs(dy - u) - std::abs(dy);
    }
    if (yi > 0.0) return std::max(yi - u, 0.0) - yi;
    if (yj > 0.0) return std::max(yj + u, 0.0) - yj;
    return 0.0;
  }
  /// One element of the subdifferential; strict inequalities at the kink.
  static double dloss(double yi, double yj, double u) {
    const double up = yj > std::max(yi - u, 0.0) ? 1.0 : 0.0;
    const double down = yi > std::max(yj + u, 0.0) ? 1.0 : 0.0;
    return up - down;
  }
  static double d2loss(double, double, double) { return 0.0; }
  static Kink kink(double yi, double yj) {
    if (yi > 0.0 && yj > 0.0) return {true, yi - yj, -1.0, 1.0};
    if (yi > 0.0) return {true, yi, -1.0, 0.0};
    if (yj > 0.0) return {true, -yj, 0.0, 1.0};
    return {};
  }
};

/// Runtime handle over the three losses.
class PairwiseModel {
 public:
  explicit PairwiseModel(ModelId id = ModelId::kPlr) : id_(id) {}

  ModelId id() const { return id_; }
  Smoothness smoothness() const;

  double loss(double yi, double yj, double u) const;
  double dloss(double yi, double yj, double u) const;
  double d2loss(double yi, double yj, double u) const;

  /// m(z_i, z_j; theta).
  double m(const Observation& zi, const Observation& zj, const Vector& theta) const;
  /// s(z_i, z_j; theta), a (sub)gradient of m in theta.
  Vector s(const Observation& zi, const Observation& zj, const Vector& theta) const;

  /// Outcome checks done once per dataset: binary y for PLL, y >= 0 for PLT.
  void validate_outcomes(const Dataset& data) const;

 private:
  ModelId id_;
};

/// Calls f with the loss policy type matching `id` (PlrLoss, PllLoss or PltLoss).
template <typename F>
decltype(auto) visit_model(ModelId id, F&& f) {
  switch (id) {
    case ModelId::kPll:
      return f(PllLoss{});
    case ModelId::kPlt:
      return f(PltLoss{});
    case ModelId::kPlr:
    default:
      return f(PlrLoss{});
  }
}

double plr_m(const Observation& zi, const Observation& zj, const Vector& theta);
Vector plr_s(const Observation& zi, const Observation& zj, const Vector& theta);
double pll_m(const Observation& zi, const Observation& zj, const Vector& theta);
Vector pll_s(const Observation& zi, const Observation& zj, const Vector& theta);
double plt_m(const Observation& zi, const Observation& zj, const Vector& theta);
Vector plt_s(const Observation& zi, const Observation& zj, const Vector& theta);

}  // namespace pairdiff

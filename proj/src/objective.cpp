#include "pairdiff/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pairdiff/error.hpp"

namespace pairdiff {

ScaledKernel::ScaledKernel(const KernelSpec& spec, double h) : spec_(spec), h_(h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth must be positive and finite");
  if (spec.dim < 1) throw ConfigError("kernel dimension must be positive");
  inv_h_ = 1.0 / h;
  norm_ = spec.family == KernelFamily::kGaussian ? std::pow(2.0 * std::numbers::pi, -0.5 * spec.dim) : 1.0;
  inv_h_pow_ = 1.0 / std::pow(h, spec.dim);
}

double ScaledKernel::operator()(const double* diff) const {
  if (spec_.family == KernelFamily::kGaussian) {
    double sq = 0.0;
    for (int j = 0; j < spec_.dim; ++j) {
      const double t = diff[j] / h_;
      sq += t * t;
    }
    return norm_ * std::exp(-0.5 * sq) * inv_h_pow_;
  }
  double value = 1.0;
  for (int j = 0; j < spec_.dim; ++j) {
    value *= kernel_factor(spec_.family, diff[j] / h_);
    if (value == 0.0) return 0.0;
  }
  return value * inv_h_pow_;
}

PairWeights pairwise_weights(const Dataset& data, const KernelSpec& spec, double h, bool prune) {
  if (spec.dim != data.d()) {
    throw ConfigError("kernel dimension " + std::to_string(spec.dim) + " does not match w dimension " +
                      std::to_string(data.d()));
  }
  const ScaledKernel kernel(spec, h);
  const Eigen::Index n = data.n();
  if (n > std::numeric_limits<std::int32_t>::max()) throw ConfigError("sample too large for pair indexing");
  const int d = spec.dim;
  const RowMatrix& w = data.w();

  PairWeights out;
  out.h = h;
  out.kernel = spec;
  out.n = n;
  out.fingerprint = data.w_fingerprint();
  out.total_pairs = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  out.normalization = 1.0 / static_cast<double>(out.total_pairs);
  if (!prune) out.pairs.reserve(out.total_pairs);

  std::vector<double> diff(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double* wi = w.row(i).data();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double* wj = w.row(j).data();
      for (int c = 0; c < d; ++c) diff[static_cast<std::size_t>(c)] = wi[c] - wj[c];
      const double kij = kernel(diff.data());
      if (kij != 0.0) ++out.nonzero;
      if (kij != 0.0 || !prune) {
        out.pairs.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), kij});
      }
    }
  }
  return out;
}

void check_weights_match(const PairWeights& weights, const Dataset& data) {
  if (weights.n != data.n() || weights.kernel.dim != data.d() || weights.fingerprint != data.w_fingerprint()) {
    throw ConfigError("pair weights were built from a different dataset");
  }
}

namespace {

template <typename Policy>
ObjectiveEval evaluate_impl(const PairWeights& weights, const Dataset& data, const Vector& theta, bool with_gradient,
                            bool with_hessian) {
  const Eigen::Index k = data.k();
  const RowMatrix& x = data.x();
  const Vector& y = data.y();
  const bool hessian = with_hessian && Policy::smoothness != Smoothness::kPiecewiseLinear;

  CompensatedSum value;
  std::vector<CompensatedSum> grad(with_gradient ? static_cast<std::size_t>(k) : 0);
  Matrix hess = Matrix::Zero(k, k);
  Vector dx(k);

  for (const PairWeight& p : weights.pairs) {
    if (p.weight == 0.0) continue;
    dx = (x.row(p.i) - x.row(p.j)).transpose();
    const double u = dx.dot(theta);
    const double yi = y[p.i];
    const double yj = y[p.j];
    value.add(Policy::loss(yi, yj, u) * p.weight);
    if (with_gradient) {
      const double g = Policy::dloss(yi, yj, u) * p.weight;
      if (g != 0.0) {
        for (Eigen::Index c = 0; c < k; ++c) grad[static_cast<std::size_t>(c)].add(g * dx[c]);
      }
    }
    if (hessian) {
      const double a = Policy::d2loss(yi, yj, u) * p.weight;
      if (a != 0.0) hess.selfadjointView<Eigen::Lower>().rankUpdate(dx, a);
    }
  }

  ObjectiveEval out;
  out.value = value.value() * weights.normalization;
  if (with_gradient) {
    out.gradient.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) out.gradient[c] = grad[static_cast<std::size_t>(c)].value() * weights.normalization;
  }
  if (with_hessian) {
    out.hessian = hess.selfadjointView<Eigen::Lower>();
    out.hessian *= weights.normalization;
  }
  return out;
}

void check_theta(const Dataset& data, const Vector& theta) {
  if (theta.size() != data.k()) {
    throw ConfigError("theta has dimension " + std::to_string(theta.size()) + ", regressors have dimension " +
                      std::to_string(data.k()));
  }
}

}  // namespace

ObjectiveEval evaluate_objective(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                                 const Vector& theta, bool with_gradient, bool with_hessian) {
  check_weights_match(weights, data);
  check_theta(data, theta);
  return visit_model(model.id(), [&](auto policy) {
    return evaluate_impl<decltype(policy)>(weights, data, theta, with_gradient, with_hessian);
  });
}

double objective_value(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                       const Vector& theta) {
  return evaluate_objective(weights, model, data, theta, false, false).value;
}

Vector objective_subgradient(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                             const Vector& theta) {
  return evaluate_objective(weights, model, data, theta, true, false).gradient;
}

Matrix objective_hessian(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                         const Vector& theta) {
  return evaluate_objective(weights, model, data, theta, false, true).hessian;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kLinear:
      return "linear";
    case Regime::kIntermediate:
      return "intermediate";
    case Regime::kSmallBandwidth:
      return "small-bandwidth";
  }
  return "unknown";
}

RegimeDiagnostics regime_diagnostics(const PairWeights& weights, Eigen::Index n, double h, int d,
                                     const RegimeThresholds& thresholds) {
  RegimeDiagnostics out;
  const double nn = static_cast<double>(n);
  const double hd = std::pow(h, d);
  out.nhd = nn * hd;
  out.n2hd = nn * nn * hd;
  out.nonzero_fraction =
      weights.total_pairs > 0 ? static_cast<double>(weights.nonzero) / static_cast<double>(weights.total_pairs) : 0.0;
  const double pairs = 0.5 * nn * (nn - 1.0);
  out.rate = std::sqrt(std::min(nn, pairs * hd));
  if (out.nhd >= thresholds.linear) {
    out.regime = Regime::kLinear;
  } else if (out.nhd <= thresholds.small_bandwidth) {
    out.regime = Regime::kSmallBandwidth;
  } else {
    out.regime = Regime::kIntermediate;
  }
  out.outside_scope = out.n2hd < thresholds.min_n2hd;
  return out;
}

}  // namespace pairdiff

#pragma once

// Randomized oracle probes shared by the unit suites and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "pairdiff/error.hpp"
#include "pairdiff/jackknife.hpp"
#include "pairdiff/models.hpp"
#include "pairdiff/objective.hpp"
#include "pairdiff/solver.hpp"
#include "support.hpp"

namespace testing {

using namespace pairdiff;

inline Observation random_observation(std::mt19937_64& rng, int k, ModelId model) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Observation z;
  z.x = Vector(k);
  for (int j = 0; j < k; ++j) z.x[j] = normal(rng);
  z.w = Vector::Zero(1);
  switch (model) {
    case ModelId::kPlr:
      z.y = 2.0 * normal(rng);
      break;
    case ModelId::kPll:
      z.y = normal(rng) > 0.0 ? 1.0 : 0.0;
      break;
    case ModelId::kPlt:
      z.y = std::max(normal(rng), 0.0) * 2.0;
      break;
  }
  return z;
}

struct ScoreProbeResult {
  int probes = 0;
  double worst_fd = 0.0;        ///< max |s - fd| / max(1, |s|) at smooth points
  double worst_inequality = 0;  ///< max violation of m(t) >= m(theta) + s'(t - theta)
  int smooth_points = 0;
};

/// Compares the pair score with central differences of the pair loss. For PLT,
/// points within `kink_gap` of a kink in any coordinate direction are skipped
/// for the difference check and the subgradient inequality is tested instead.
inline ScoreProbeResult probe_scores(ModelId id, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 3);
  const PairwiseModel model(id);
  ScoreProbeResult out;
  const double step = 1e-5;
  for (int p = 0; p < probes; ++p) {
    const int k = dim(rng);
    const Observation zi = random_observation(rng, k, id);
    const Observation zj = random_observation(rng, k, id);
    Vector theta(k);
    for (int j = 0; j < k; ++j) theta[j] = normal(rng);
    const Vector s = model.s(zi, zj, theta);
    const double m0 = model.m(zi, zj, theta);
    ++out.probes;

    bool smooth = true;
    if (id == ModelId::kPlt) {
      const Kink kink = PltLoss::kink(zi.y, zj.y);
      const Vector dx = zi.x - zj.x;
      if (kink.present) {
        const double u = dx.dot(theta);
        smooth = std::abs(u - kink.at) > 2.0 * step * dx.lpNorm<1>() + 1e-9;
      }
      for (int t = 0; t < 4; ++t) {
        Vector other(k);
        for (int j = 0; j < k; ++j) other[j] = theta[j] + (t == 0 ? 1e-3 : 2.0) * normal(rng);
        const double gap = model.m(zi, zj, other) - m0 - s.dot(other - theta);
        out.worst_inequality = std::max(out.worst_inequality, -gap);
      }
      // Exactly at the kink the returned element must still be a subgradient.
      if (kink.present && dx.squaredNorm() > 0.0) {
        const Vector at = theta + dx * ((kink.at - dx.dot(theta)) / dx.squaredNorm());
        const Vector sk = model.s(zi, zj, at);
        const double mk = model.m(zi, zj, at);
        for (int t = 0; t < 4; ++t) {
          Vector other(k);
          for (int j = 0; j < k; ++j) other[j] = at[j] + normal(rng);
          const double gap = model.m(zi, zj, other) - mk - sk.dot(other - at);
          out.worst_inequality = std::max(out.worst_inequality, -gap - 1e-15 * (1.0 + std::abs(mk)));
        }
      }
    }
    if (!smooth) continue;
    ++out.smooth_points;
    for (int j = 0; j < k; ++j) {
      Vector up = theta;
      Vector down = theta;
      up[j] += step;
      down[j] -= step;
      const double fd = (model.m(zi, zj, up) - model.m(zi, zj, down)) / (2.0 * step);
      out.worst_fd = std::max(out.worst_fd, std::abs(fd - s[j]) / std::max(1.0, std::abs(s[j])));
    }
  }
  return out;
}

/// k = 1 PLT objective: minimize over every breakpoint of the pair losses. The
/// objective is convex piecewise linear, so the minimum is attained at a
/// breakpoint whenever it is finite.
inline double plt_enumeration_minimum(const Dataset& data, const KernelSpec& spec, double h, double* argmin) {
  const PairWeights weights = pairwise_weights(data, spec, h);
  const PairwiseModel model(ModelId::kPlt);
  std::vector<double> candidates;
  for (const PairWeight& p : weights.pairs) {
    const Kink kink = PltLoss::kink(data.y()[p.i], data.y()[p.j]);
    const double dx = data.x()(p.i, 0) - data.x()(p.j, 0);
    if (kink.present && dx != 0.0) candidates.push_back(kink.at / dx);
  }
  candidates.push_back(0.0);
  double best = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const double v = brute_force_objective(data, ModelId::kPlt, spec.family, h, Vector::Constant(1, t));
    if (v < best) {
      best = v;
      if (argmin) *argmin = t;
    }
  }
  return best;
}

struct EnumerationProbe {
  int instances = 0;
  int skipped = 0;          ///< unbounded objectives (no finite minimizer)
  double worst_value = 0.0; ///< |M(solver) - M(enumeration)| / max(1, |M|)
  double worst_theta = 0.0; ///< distance to the enumerated minimizer set
};

/// Random k = 1 PLT instances with n <= 6. The minimizer can be an interval,
/// so the argument check measures the distance from the solver output to the
/// set of enumerated points sharing the minimum value.
inline EnumerationProbe probe_plt_enumeration(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> size(3, 6);
  EnumerationProbe out;
  const KernelSpec spec{KernelFamily::kGaussian, 1};
  int attempts = 0;
  while (out.instances < instances && attempts < 50 * instances) {
    ++attempts;
    const int n = size(rng);
    Vector y(n);
    RowMatrix x(n, 1);
    RowMatrix w(n, 1);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = normal(rng);
      w(i, 0) = normal(rng);
      y[i] = std::max(0.8 * x(i, 0) + normal(rng), 0.0);
    }
    const Dataset data(y, x, w);
    double t_enum = 0.0;
    const double enum_value = plt_enumeration_minimum(data, spec, 1.0, &t_enum);
    // A bounded objective has slope >= 0 far right and <= 0 far left.
    const PairwiseModel model(ModelId::kPlt);
    const PairWeights weights = pairwise_weights(data, spec, 1.0);
    const double far = 1e6;
    const double right = objective_value(weights, model, data, Vector::Constant(1, far)) -
                         objective_value(weights, model, data, Vector::Constant(1, far - 1.0));
    const double left = objective_value(weights, model, data, Vector::Constant(1, -far)) -
                        objective_value(weights, model, data, Vector::Constant(1, -far + 1.0));
    if (right < 0.0 || left < 0.0) {
      ++out.skipped;
      continue;
    }
    SolverConfig config;
    config.init = InitRule::kZero;
    const EstimateRecord rec = estimate(weights, data, model, config);
    const double solver_value = brute_force_objective(data, ModelId::kPlt, spec.family, 1.0, rec.theta);
    out.worst_value = std::max(out.worst_value, std::abs(solver_value - enum_value) / std::max(1.0, std::abs(enum_value)));
    // Distance to the minimizer interval: bracket it by enumerated optima.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const PairWeight& p : weights.pairs) {
      const Kink kink = PltLoss::kink(y[p.i], y[p.j]);
      const double dx = x(p.i, 0) - x(p.j, 0);
      if (!kink.present || dx == 0.0) continue;
      const double t = kink.at / dx;
      const double v = brute_force_objective(data, ModelId::kPlt, spec.family, 1.0, Vector::Constant(1, t));
      if (std::abs(v - enum_value) <= 1e-12 * std::max(1.0, std::abs(enum_value))) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
    if (!std::isfinite(lo)) lo = hi = t_enum;
    const double t = rec.theta[0];
    const double dist = t < lo ? lo - t : (t > hi ? t - hi : 0.0);
    out.worst_theta = std::max(out.worst_theta, dist);
    ++out.instances;
  }
  return out;
}

struct ClosedFormProbe {
  int instances = 0;
  double worst_theta = 0.0;      ///< relative difference closed form vs generic solver
  double worst_objective = 0.0;  ///< relative difference library vs brute-force objective
  double worst_reference = 0.0;  ///< closed form vs long-double normal equations
};

/// Random PLR instances (n <= 200, k <= 3, d <= 2).
inline ClosedFormProbe probe_plr_closed_form(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(10, 200);
  std::uniform_int_distribution<int> dim_k(1, 3);
  std::uniform_int_distribution<int> dim_d(1, 2);
  std::uniform_int_distribution<int> fam(0, 2);
  std::uniform_real_distribution<double> bandwidth(0.4, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ClosedFormProbe out;
  const PairwiseModel model(ModelId::kPlr);
  while (out.instances < instances) {
    const int n = size(rng);
    const int k = dim_k(rng);
    const int d = dim_d(rng);
    const KernelSpec spec{static_cast<KernelFamily>(fam(rng)), d};
    const double h = bandwidth(rng);
    const Dataset data = random_dataset(rng, n, k, d, ModelId::kPlr);
    const PairWeights weights = pairwise_weights(data, spec, h);
    EstimateRecord closed;
    try {
      closed = solve_plr_closed_form(weights, data);
    } catch (const NumericalError&) {
      continue;  // too few weighted pairs for identification at this h
    }
    SolverConfig config;
    config.init = InitRule::kZero;
    const EstimateRecord newton = solve_smooth(weights, model, data, config, Vector::Zero(k));
    const double scale = std::max(1.0, closed.theta.norm());
    out.worst_theta = std::max(out.worst_theta, (closed.theta - newton.theta).norm() / scale);
    const Vector reference = brute_force_plr(data, spec.family, h);
    out.worst_reference = std::max(out.worst_reference, (closed.theta - reference).norm() / scale);

    Vector theta(k);
    for (int j = 0; j < k; ++j) theta[j] = normal(rng);
    const double lib = objective_value(weights, model, data, theta);
    const double ref = brute_force_objective(data, ModelId::kPlr, spec.family, h, theta);
    out.worst_objective = std::max(out.worst_objective, std::abs(lib - ref) / std::abs(ref));
    ++out.instances;
  }
  return out;
}

struct JackknifeProbe {
  int vectors = 0;
  double worst_sum = 0.0;
  double worst_moment = 0.0;
};

inline JackknifeProbe probe_jackknife(int per_order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(0.2, 4.0);
  JackknifeProbe out;
  for (int order : {0, 2, 4}) {
    for (int rep = 0; rep < per_order; ++rep) {
      Vector c(order / 2 + 1);
      c[0] = 1.0;
      for (Eigen::Index l = 1; l < c.size(); ++l) {
        do {
          c[l] = draw(rng);
        } while ((c.head(l).array() - c[l]).abs().minCoeff() < 0.05);
      }
      const Vector lambda = solve_lambda(order, c);
      out.worst_sum = std::max(out.worst_sum, std::abs(lambda.sum() - 1.0));
      for (int m = 1; m <= order / 2; ++m) {
        double moment = 0.0;
        for (Eigen::Index l = 0; l < c.size(); ++l) moment += lambda[l] * std::pow(c[l], 2 * m);
        out.worst_moment = std::max(out.worst_moment, std::abs(moment));
      }
      ++out.vectors;
    }
  }
  return out;
}

}  // namespace testing

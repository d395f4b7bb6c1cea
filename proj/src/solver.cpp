#include "pairdiff/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "pairdiff/error.hpp"

namespace pairdiff {

std::string to_string(SolverPath path) {
  switch (path) {
    case SolverPath::kClosedForm:
      return "closed_form";
    case SolverPath::kNewton:
      return "newton";
    case SolverPath::kGradientFallback:
      return "gradient_fallback";
    case SolverPath::kNonsmooth:
      return "nonsmooth";
  }
  return "unknown";
}

std::string to_string(InitRule rule) { return rule == InitRule::kZero ? "zero" : "plr_closed_form"; }

InitRule parse_init_rule(std::string_view name) {
  if (name == "plr_closed_form") return InitRule::kPlrClosedForm;
  if (name == "zero") return InitRule::kZero;
  throw ConfigError("unknown solver.init '" + std::string(name) + "' (expected plr_closed_form or zero)");
}

double SolverConfig::slack_for(Eigen::Index n) const {
  if (slack > 0.0) return slack;
  const double nn = static_cast<double>(n);
  return std::min(1e-10, 0.01 / (nn * nn));
}

void SolverConfig::validate() const {
  if (slack < 0.0 || !std::isfinite(slack)) throw ConfigError("solver slack must be nonnegative");
  if (!(grad_tol > 0.0)) throw ConfigError("solver.grad_tol must be positive");
  if (max_iter < 1) throw ConfigError("solver.max_iter must be at least 1");
  if (subgradient_iter < 0) throw ConfigError("solver.subgradient_iter must be nonnegative");
  if (!(armijo > 0.0 && armijo < 0.5)) throw ConfigError("solver.armijo must lie in (0, 0.5)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("solver.backtrack must lie in (0, 1)");
}

namespace {

/// Nonzero-weight pairs laid out for repeated passes: x_i - x_j, outcomes and weights.
struct PairCache {
  Eigen::Index k = 0;
  RowMatrix dx;
  std::vector<double> yi;
  std::vector<double> yj;
  std::vector<double> w;
  double normalization = 0.0;

  std::size_t size() const { return w.size(); }
  const double* row(std::size_t p) const { return dx.row(static_cast<Eigen::Index>(p)).data(); }
};

// Pairs whose loss is identically zero in theta are left out: concordant PLL
// pairs and PLT pairs with both outcomes censored. Dropping zero terms leaves
// every compensated sum unchanged.
bool informative(ModelId id, double yi, double yj) {
  switch (id) {
    case ModelId::kPll:
      return yi != yj;
    case ModelId::kPlt:
      return yi > 0.0 || yj > 0.0;
    case ModelId::kPlr:
      break;
  }
  return true;
}

PairCache build_cache(const PairWeights& weights, const Dataset& data, ModelId id) {
  PairCache cache;
  cache.k = data.k();
  cache.normalization = weights.normalization;
  const auto keep = [&](const PairWeight& p) {
    return p.weight != 0.0 && informative(id, data.y()[p.i], data.y()[p.j]);
  };
  std::size_t count = 0;
  for (const PairWeight& p : weights.pairs) count += keep(p) ? 1 : 0;
  cache.dx.resize(static_cast<Eigen::Index>(count), cache.k);
  cache.yi.reserve(count);
  cache.yj.reserve(count);
  cache.w.reserve(count);
  Eigen::Index r = 0;
  for (const PairWeight& p : weights.pairs) {
    if (!keep(p)) continue;
    cache.dx.row(r++) = data.x().row(p.i) - data.x().row(p.j);
    cache.yi.push_back(data.y()[p.i]);
    cache.yj.push_back(data.y()[p.j]);
    cache.w.push_back(p.weight);
  }
  return cache;
}

inline double dot_row(const double* a, const Vector& b) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < b.size(); ++c) s += a[c] * b[c];
  return s;
}

template <typename Policy>
ObjectiveEval eval_cache(const PairCache& cache, const Vector& theta, bool with_gradient, bool with_hessian) {
  const Eigen::Index k = cache.k;
  CompensatedSum value;
  std::vector<CompensatedSum> grad(with_gradient ? static_cast<std::size_t>(k) : 0);
  Matrix hess = Matrix::Zero(k, k);
  for (std::size_t p = 0; p < cache.size(); ++p) {
    const double* dx = cache.row(p);
    const double u = dot_row(dx, theta);
    double l = 0.0;
    double dl = 0.0;
    double d2l = 0.0;
    if constexpr (Policy::id == ModelId::kPll) {
      PllLoss::terms(cache.yi[p], u, l, dl, d2l);
    } else {
      l = Policy::loss(cache.yi[p], cache.yj[p], u);
      if (with_gradient) dl = Policy::dloss(cache.yi[p], cache.yj[p], u);
      if (with_hessian) d2l = Policy::d2loss(cache.yi[p], cache.yj[p], u);
    }
    value.add(l * cache.w[p]);
    if (with_gradient) {
      const double g = dl * cache.w[p];
      if (g != 0.0) {
        for (Eigen::Index c = 0; c < k; ++c) grad[static_cast<std::size_t>(c)].add(g * dx[c]);
      }
    }
    if (with_hessian) {
      const double a = d2l * cache.w[p];
      if (a != 0.0) {
        for (Eigen::Index r = 0; r < k; ++r) {
          for (Eigen::Index c = 0; c <= r; ++c) hess(r, c) += a * dx[r] * dx[c];
        }
      }
    }
  }
  ObjectiveEval out;
  out.value = value.value() * cache.normalization;
  if (with_gradient) {
    out.gradient.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) out.gradient[c] = grad[static_cast<std::size_t>(c)].value() * cache.normalization;
  }
  if (with_hessian) {
    out.hessian = hess.selfadjointView<Eigen::Lower>();
    out.hessian *= cache.normalization;
  }
  return out;
}

/// Typical gradient magnitude, used to make tolerances scale-free.
double gradient_scale(const PairCache& cache) {
  CompensatedSum s;
  for (std::size_t p = 0; p < cache.size(); ++p) {
    const double* dx = cache.row(p);
    double m = 0.0;
    for (Eigen::Index c = 0; c < cache.k; ++c) m = std::max(m, std::abs(dx[c]));
    s.add(cache.w[p] * m);
  }
  return std::max(s.value() * cache.normalization, std::numeric_limits<double>::min());
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os.precision(4);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

double symmetric_condition(const Matrix& a) {
  if (a.size() == 0) return 1.0;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void require_pairs(const PairWeights& weights) {
  if (weights.degenerate()) {
    throw NumericalError("no usable pairs: every kernel weight is zero at h = " + std::to_string(weights.h));
  }
}

// ---------------------------------------------------------------------------
// Line searches along theta + t p, t >= 0

struct LineResult {
  double t = 0.0;
  bool moved = false;
};

/// Exact minimizer of a piecewise-linear convex objective along a ray: walk the
/// sorted breakpoints until the directional slope turns nonnegative.
LineResult piecewise_linear_line_search(const PairCache& cache, const Vector& theta, const Vector& dir) {
  struct Break {
    double t;
    double jump;
  };
  std::vector<Break> breaks;
  double slope = 0.0;
  double magnitude = 0.0;
  for (std::size_t p = 0; p < cache.size(); ++p) {
    const double* dx = cache.row(p);
    const double v = dot_row(dx, dir);
    if (v == 0.0) continue;
    const double u0 = dot_row(dx, theta);
    const Kink kink = PltLoss::kink(cache.yi[p], cache.yj[p]);
    if (!kink.present) continue;
    const double wv = cache.w[p] * v;
    magnitude += std::abs(wv);
    // Slope in t on the side of the kink reached as t grows from 0.
    const double tb = (kink.at - u0) / v;
    const bool before_kink = tb > 0.0;  // the kink lies ahead along the ray
    const double leaving = v > 0.0 ? (before_kink ? kink.left_slope : kink.right_slope)
                                   : (before_kink ? kink.right_slope : kink.left_slope);
    slope += wv * leaving;
    if (before_kink) breaks.push_back({tb, std::abs(wv) * (kink.right_slope - kink.left_slope)});
  }
  // Slopes that cancel exactly in exact arithmetic can round to tiny negatives.
  const double tol = 1e-12 * magnitude;
  if (slope >= -tol) return {};
  std::sort(breaks.begin(), breaks.end(), [](const Break& a, const Break& b) { return a.t < b.t; });
  for (const Break& b : breaks) {
    slope += b.jump;
    if (slope >= -tol) return {b.t, true};
  }
  throw NumericalError("objective decreases without bound along the ray " + format_vector(dir));
}

template <typename Policy>
double directional_derivative(const PairCache& cache, const Vector& theta, const Vector& dir, double t) {
  CompensatedSum s;
  for (std::size_t p = 0; p < cache.size(); ++p) {
    const double* dx = cache.row(p);
    const double v = dot_row(dx, dir);
    if (v == 0.0) continue;
    const double u = dot_row(dx, theta) + t * v;
    s.add(cache.w[p] * v * Policy::dloss(cache.yi[p], cache.yj[p], u));
  }
  return s.value();
}

/// Root of the directional derivative for differentiable losses (Illinois method).
template <typename Policy>
LineResult smooth_line_search(const PairCache& cache, const Vector& theta, const Vector& dir) {
  double fa = directional_derivative<Policy>(cache, theta, dir, 0.0);
  if (!(fa < 0.0)) return {};
  double a = 0.0;
  double b = 1.0;
  double fb = directional_derivative<Policy>(cache, theta, dir, b);
  int expand = 0;
  while (fb < 0.0) {
    a = b;
    fa = fb;
    b *= 2.0;
    fb = directional_derivative<Policy>(cache, theta, dir, b);
    if (++expand > 200) throw NumericalError("objective decreases without bound along the ray " + format_vector(dir));
  }
  int side = 0;
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = directional_derivative<Policy>(cache, theta, dir, c);
    if (fc == 0.0) return {c, c > 0.0};
    if (fc < 0.0) {
      a = c;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  const double t = fa == fb ? 0.5 * (a + b) : (a * fb - b * fa) / (fb - fa);
  return {t, t > 0.0};
}

template <typename Policy>
LineResult line_search(const PairCache& cache, const Vector& theta, const Vector& dir) {
  if constexpr (Policy::smoothness == Smoothness::kPiecewiseLinear) {
    return piecewise_linear_line_search(cache, theta, dir);
  } else {
    return smooth_line_search<Policy>(cache, theta, dir);
  }
}

// ---------------------------------------------------------------------------
// Minimum-norm element of the subdifferential restricted to near-active kinks

/// Solves min || g0 + sum_i a_i t_i || over t_i in [lo_i, hi_i]: coordinate
/// descent identifies the free set, then an exact projection makes the result
/// orthogonal to every free column.
Vector min_norm_subgradient(const Vector& g0, const std::vector<Vector>& cols, const std::vector<double>& lo,
                            const std::vector<double>& hi) {
  const std::size_t m = cols.size();
  if (m == 0) return g0;
  std::vector<double> t(m);
  std::vector<double> sq(m);
  Vector r = g0;
  for (std::size_t i = 0; i < m; ++i) {
    t[i] = 0.5 * (lo[i] + hi[i]);
    sq[i] = cols[i].squaredNorm();
    r += cols[i] * t[i];
  }
  for (int sweep = 0; sweep < 500; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (sq[i] == 0.0) continue;
      const double next = std::clamp(t[i] - cols[i].dot(r) / sq[i], lo[i], hi[i]);
      const double delta = next - t[i];
      if (delta != 0.0) {
        r += cols[i] * delta;
        t[i] = next;
        change = std::max(change, std::abs(delta) * std::sqrt(sq[i]));
      }
    }
    if (change <= 1e-15 * (1.0 + r.norm())) break;
  }
  // Exact refinement: with the bound set fixed, r is g_fixed projected onto the
  // orthogonal complement of the free columns.
  const double eps = 1e-12;
  Vector fixed = g0;
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < m; ++i) {
    const double width = hi[i] - lo[i];
    if (sq[i] > 0.0 && t[i] > lo[i] + eps * width && t[i] < hi[i] - eps * width) {
      free.push_back(i);
    } else {
      fixed += cols[i] * t[i];
    }
  }
  if (free.empty()) return r;
  Matrix a(g0.size(), static_cast<Eigen::Index>(free.size()));
  for (std::size_t f = 0; f < free.size(); ++f) a.col(static_cast<Eigen::Index>(f)) = cols[free[f]];
  const Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const Vector tf = qr.solve(-fixed);
  for (std::size_t f = 0; f < free.size(); ++f) {
    const double v = tf[static_cast<Eigen::Index>(f)];
    if (v < lo[free[f]] || v > hi[free[f]]) return r;
  }
  const Vector projected = fixed + a * tf;
  return projected.norm() <= r.norm() ? projected : r;
}

struct Steepest {
  Vector g;  ///< minimum-norm subgradient over near-active kinks
};

template <typename Policy>
Steepest steepest_subgradient(const PairCache& cache, const Vector& theta, double tol_u) {
  const Eigen::Index k = cache.k;
  std::vector<CompensatedSum> g0(static_cast<std::size_t>(k));
  std::vector<Vector> cols;
  std::vector<double> lo;
  std::vector<double> hi;
  for (std::size_t p = 0; p < cache.size(); ++p) {
    const double* dx = cache.row(p);
    const double u = dot_row(dx, theta);
    if constexpr (Policy::smoothness == Smoothness::kPiecewiseLinear) {
      const Kink kink = PltLoss::kink(cache.yi[p], cache.yj[p]);
      if (kink.present && std::abs(u - kink.at) <= tol_u * (1.0 + std::abs(kink.at))) {
        Vector a(k);
        for (Eigen::Index c = 0; c < k; ++c) a[c] = cache.w[p] * dx[c] * cache.normalization;
        cols.push_back(std::move(a));
        lo.push_back(kink.left_slope);
        hi.push_back(kink.right_slope);
        continue;
      }
    }
    const double g = Policy::dloss(cache.yi[p], cache.yj[p], u) * cache.w[p];
    if (g != 0.0) {
      for (Eigen::Index c = 0; c < k; ++c) g0[static_cast<std::size_t>(c)].add(g * dx[c]);
    }
  }
  Vector base(k);
  for (Eigen::Index c = 0; c < k; ++c) base[c] = g0[static_cast<std::size_t>(c)].value() * cache.normalization;
  return {min_norm_subgradient(base, cols, lo, hi)};
}

/// Polyak steps with a running-best target and iterate averaging.
template <typename Policy>
Vector subgradient_phase(const PairCache& cache, Vector theta, int iterations, double& f_best) {
  Vector best = theta;
  ObjectiveEval ev = eval_cache<Policy>(cache, theta, true, false);
  f_best = ev.value;
  double gap = std::max(1e-3 * std::abs(ev.value), 1e-12);
  Vector avg = Vector::Zero(theta.size());
  int averaged = 0;
  for (int it = 0; it < iterations; ++it) {
    const double g2 = ev.gradient.squaredNorm();
    if (g2 == 0.0) break;
    const double step = (ev.value - f_best + gap) / g2;
    theta -= step * ev.gradient;
    ev = eval_cache<Policy>(cache, theta, true, false);
    if (ev.value < f_best) {
      f_best = ev.value;
      best = theta;
    } else {
      gap *= 0.5;
    }
    if (2 * it >= iterations) {
      avg += theta;
      ++averaged;
    }
  }
  if (averaged > 0) {
    avg /= averaged;
    const double fa = eval_cache<Policy>(cache, avg, false, false).value;
    if (fa < f_best) {
      f_best = fa;
      best = avg;
    }
  }
  return best;
}

template <typename Policy>
EstimateRecord nonsmooth_impl(const PairCache& cache, const SolverConfig& config, Eigen::Index n, Vector theta) {
  const Eigen::Index k = cache.k;
  const double slack = config.slack_for(n);
  const double gtol = config.grad_tol * gradient_scale(cache);
  const bool piecewise = Policy::smoothness == Smoothness::kPiecewiseLinear;
  const int max_iter = piecewise ? config.max_iter : 25 * config.max_iter;

  EstimateRecord rec;
  rec.path = SolverPath::kNonsmooth;
  rec.initial_objective = eval_cache<Policy>(cache, theta, false, false).value;
  double f = rec.initial_objective;
  if (piecewise && config.subgradient_iter > 0) {
    double fb = f;
    Vector cand = subgradient_phase<Policy>(cache, theta, config.subgradient_iter, fb);
    if (fb < f) {
      theta = cand;
      f = fb;
    }
  }

  const double tol_min = 1e-13;
  const double tol_max = 1e-6;
  double tol_u = tol_min;
  int it = 0;
  bool stationary = false;
  bool certified = false;
  double gnorm = 0.0;
  for (int round = 0; round < 50 && !certified; ++round) {
    while (it < max_iter) {
      ++it;
      const Steepest st = steepest_subgradient<Policy>(cache, theta, tol_u);
      gnorm = st.g.norm();
      if (gnorm <= gtol) {
        stationary = true;
        break;
      }
      const Vector dir = -st.g;
      const LineResult ls = line_search<Policy>(cache, theta, dir);
      bool progress = false;
      if (ls.moved) {
        const Vector next = theta + ls.t * dir;
        const double fn = eval_cache<Policy>(cache, next, false, false).value;
        if (fn < f) {
          progress = true;
          const double decrease = f - fn;
          theta = next;
          f = fn;
          if (!piecewise && decrease < 1e-3 * slack) {
            stationary = true;
            break;
          }
          if (piecewise && decrease < 1e-3 * slack) tol_u = std::min(tol_u * 10.0, tol_max);
        }
      }
      if (!progress) {
        if (tol_u >= tol_max || !piecewise) break;
        tol_u = std::min(tol_u * 10.0, tol_max);
      }
    }
    // Certificate: exact line minima along both signs of every axis and of the
    // steepest direction must not beat the current value by more than the slack.
    std::vector<Vector> probes;
    for (Eigen::Index c = 0; c < k; ++c) {
      probes.push_back(Vector::Unit(k, c));
      probes.push_back(-Vector::Unit(k, c));
    }
    const Steepest st = steepest_subgradient<Policy>(cache, theta, tol_min);
    if (st.g.norm() > 0.0) probes.push_back(-st.g);
    bool improved = false;
    for (const Vector& dir : probes) {
      const LineResult ls = line_search<Policy>(cache, theta, dir);
      if (!ls.moved) continue;
      const Vector next = theta + ls.t * dir;
      const double fn = eval_cache<Policy>(cache, next, false, false).value;
      if (fn < f - slack) {
        theta = next;
        f = fn;
        improved = true;
      } else if (fn < f) {
        theta = next;
        f = fn;
      }
    }
    certified = !improved;
    if (improved) tol_u = tol_min;
    if (it >= max_iter && !certified) break;
  }
  if (!certified) {
    throw NumericalError("nonsmooth solver did not converge within " + std::to_string(max_iter) +
                         " iterations (objective " + std::to_string(f) + ")");
  }
  (void)stationary;
  rec.theta = theta;
  rec.objective = f;
  rec.grad_norm = gnorm;
  rec.iterations = it;
  rec.certified = certified;
  return rec;
}

/// True when every weighted discordant pair is classified with a strictly positive margin.
bool pairwise_separated(const PairCache& cache, const Vector& theta) {
  bool any = false;
  for (std::size_t p = 0; p < cache.size(); ++p) {
    if (cache.yi[p] == cache.yj[p]) continue;
    any = true;
    const double u = dot_row(cache.row(p), theta);
    if ((cache.yi[p] - cache.yj[p]) * u <= 0.0) return false;
  }
  return any;
}

bool has_discordant_pairs(const PairCache& cache) {
  for (std::size_t p = 0; p < cache.size(); ++p) {
    if (cache.yi[p] != cache.yj[p]) return true;
  }
  return false;
}

template <typename Policy>
EstimateRecord smooth_impl(const PairCache& cache, const SolverConfig& config, Eigen::Index n, Vector theta) {
  const double slack = config.slack_for(n);
  const double gtol = config.grad_tol * gradient_scale(cache);
  EstimateRecord rec;
  rec.path = SolverPath::kNewton;
  ObjectiveEval ev = eval_cache<Policy>(cache, theta, true, true);
  rec.initial_objective = ev.value;
  bool converged = false;
  int it = 0;
  for (; it < config.max_iter; ++it) {
    const double gnorm = ev.gradient.norm();
    if (gnorm <= gtol) {
      converged = true;
      break;
    }
    const Eigen::LDLT<Matrix> ldlt(ev.hessian);
    bool newton = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (newton) {
      const Vector dd = ldlt.vectorD();
      newton = dd.minCoeff() > 1e-14 * std::max(dd.maxCoeff(), std::numeric_limits<double>::min());
    }
    Vector step = newton ? Vector(-ldlt.solve(ev.gradient)) : Vector(-ev.gradient);
    double slope = ev.gradient.dot(step);
    if (!(slope < 0.0)) {
      newton = false;
      step = -ev.gradient;
      slope = -ev.gradient.squaredNorm();
    }
    if (!newton) rec.path = SolverPath::kGradientFallback;
    if (newton && -0.5 * slope <= slack) {
      converged = true;
      break;
    }
    double t = 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      fn = eval_cache<Policy>(cache, theta + t * step, false, false).value;
      if (fn <= ev.value + config.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= config.backtrack;
    }
    if (!accepted) {
      converged = gnorm <= 1e3 * gtol;
      break;
    }
    theta += t * step;
    const double decrease = ev.value - fn;
    ev = eval_cache<Policy>(cache, theta, true, true);
    if (newton && decrease < slack && ev.gradient.norm() <= 1e3 * gtol) {
      converged = true;
      ++it;
      break;
    }
    if (theta.norm() > 1e8) break;
  }
  if constexpr (Policy::id == ModelId::kPll) {
    if (!has_discordant_pairs(cache)) {
      throw NumericalError("no usable pairs: no weighted pair has distinct outcomes");
    }
    if (pairwise_separated(cache, theta)) {
      throw NumericalError("pairwise data are perfectly separated along " + format_vector(theta) +
                           "; the logit objective has no finite minimizer");
    }
  }
  if (!converged) {
    throw NumericalError("smooth solver did not converge within " + std::to_string(config.max_iter) +
                         " iterations (gradient norm " + std::to_string(ev.gradient.norm()) + ")");
  }
  rec.theta = theta;
  rec.objective = ev.value;
  rec.grad_norm = ev.gradient.norm();
  rec.iterations = it;
  rec.condition = symmetric_condition(ev.hessian);
  rec.certified = true;
  return rec;
}

void check_inputs(const PairWeights& weights, const Dataset& data, const Vector& init) {
  check_weights_match(weights, data);
  if (init.size() != data.k()) throw ConfigError("initial point has the wrong dimension");
  require_pairs(weights);
}

}  // namespace

EstimateRecord solve_plr_closed_form(const PairWeights& weights, const Dataset& data) {
  check_weights_match(weights, data);
  require_pairs(weights);
  const Eigen::Index k = data.k();
  const RowMatrix& x = data.x();
  const Vector& y = data.y();
  std::vector<CompensatedSum> gram(static_cast<std::size_t>(k * k));
  std::vector<CompensatedSum> rhs(static_cast<std::size_t>(k));
  Vector dx(k);
  for (const PairWeight& p : weights.pairs) {
    if (p.weight == 0.0) continue;
    dx = (x.row(p.i) - x.row(p.j)).transpose();
    const double dy = y[p.i] - y[p.j];
    for (Eigen::Index r = 0; r < k; ++r) {
      const double wr = p.weight * dx[r];
      rhs[static_cast<std::size_t>(r)].add(wr * dy);
      for (Eigen::Index c = 0; c <= r; ++c) gram[static_cast<std::size_t>(r * k + c)].add(wr * dx[c]);
    }
  }
  Matrix g(k, k);
  Vector b(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    b[r] = rhs[static_cast<std::size_t>(r)].value() * weights.normalization;
    for (Eigen::Index c = 0; c <= r; ++c) {
      g(r, c) = g(c, r) = gram[static_cast<std::size_t>(r * k + c)].value() * weights.normalization;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const double lo = eig.eigenvalues()[0];
  const double hi = eig.eigenvalues()[k - 1];
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= 1e12)) {
    throw NumericalError("weighted Gram matrix is singular or ill-conditioned (condition " + std::to_string(condition) +
                         "); degenerate direction " + format_vector(eig.eigenvectors().col(0)));
  }
  const Eigen::LLT<Matrix> llt(g);
  Vector theta = llt.solve(b);
  theta += llt.solve(b - g * theta);

  EstimateRecord rec;
  rec.theta = theta;
  rec.h = weights.h;
  rec.path = SolverPath::kClosedForm;
  rec.iterations = 1;
  rec.condition = condition;
  rec.grad_norm = (g * theta - b).norm();
  const PairwiseModel plr(ModelId::kPlr);
  rec.initial_objective = objective_value(weights, plr, data, Vector::Zero(k));
  rec.objective = objective_value(weights, plr, data, theta);
  const double scale = g.norm() * theta.norm() + b.norm();
  rec.certified = rec.grad_norm <= 1e-10 * std::max(scale, std::numeric_limits<double>::min());
  return rec;
}

Vector initial_point(const PairWeights& weights, const Dataset& data, const SolverConfig& config) {
  if (config.init == InitRule::kPlrClosedForm) {
    try {
      return solve_plr_closed_form(weights, data).theta;
    } catch (const NumericalError&) {
      // Falls through to the zero vector.
    }
  }
  return Vector::Zero(data.k());
}

EstimateRecord solve_smooth(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                            const SolverConfig& config, const Vector& init) {
  config.validate();
  if (model.smoothness() == Smoothness::kPiecewiseLinear) {
    throw ConfigError("smooth solver requires a twice-differentiable loss; " + to_string(model.id()) + " is not");
  }
  check_inputs(weights, data, init);
  const PairCache cache = build_cache(weights, data, model.id());
  EstimateRecord rec = visit_model(model.id(), [&](auto policy) {
    using Policy = decltype(policy);
    EstimateRecord r = smooth_impl<Policy>(cache, config, data.n(), init);
    r.objective = eval_cache<Policy>(cache, r.theta, false, false).value;
    r.initial_objective = eval_cache<Policy>(cache, init, false, false).value;
    return r;
  });
  rec.h = weights.h;
  return rec;
}

EstimateRecord solve_nonsmooth(const PairWeights& weights, const PairwiseModel& model, const Dataset& data,
                               const SolverConfig& config, const Vector& init) {
  config.validate();
  check_inputs(weights, data, init);
  const PairCache cache = build_cache(weights, data, model.id());
  EstimateRecord rec = visit_model(model.id(), [&](auto policy) {
    using Policy = decltype(policy);
    EstimateRecord r = nonsmooth_impl<Policy>(cache, config, data.n(), init);
    r.objective = eval_cache<Policy>(cache, r.theta, false, false).value;
    r.initial_objective = eval_cache<Policy>(cache, init, false, false).value;
    return r;
  });
  rec.h = weights.h;
  if (rec.objective > rec.initial_objective) {
    rec.theta = init;
    rec.objective = rec.initial_objective;
  }
  return rec;
}

EstimateRecord estimate(const PairWeights& weights, const Dataset& data, const PairwiseModel& model,
                        const SolverConfig& config) {
  config.validate();
  model.validate_outcomes(data);
  require_pairs(weights);
  EstimateRecord rec;
  switch (model.smoothness()) {
    case Smoothness::kQuadratic:
      rec = solve_plr_closed_form(weights, data);
      break;
    case Smoothness::kSmooth:
      rec = solve_smooth(weights, model, data, config, initial_point(weights, data, config));
      break;
    case Smoothness::kPiecewiseLinear:
      rec = solve_nonsmooth(weights, model, data, config, initial_point(weights, data, config));
      break;
  }
  rec.regime = regime_diagnostics(weights, data.n(), weights.h, static_cast<int>(data.d()));
  return rec;
}

EstimateRecord estimate(const Dataset& data, const PairwiseModel& model, const KernelSpec& spec, double h,
                        const SolverConfig& config) {
  const PairWeights weights = pairwise_weights(data, spec, h);
  return estimate(weights, data, model, config);
}

}  // namespace pairdiff

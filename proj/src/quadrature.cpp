#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pairdiff/error.hpp"
#include "pairdiff/kernel.hpp"

namespace pairdiff {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix.
  Matrix jacobi = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double beta = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = beta;
    jacobi(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = solver.eigenvalues()[i];
    const double v = solver.eigenvectors()(0, i);
    weights[i] = 2.0 * v * v;
  }
  // Symmetrize so mirrored nodes are exact negatives of each other.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
    const double w = 0.5 * (weights[i] + weights[n - 1 - i]);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

std::vector<std::vector<int>> multi_indices(int dim, int max_order) {
  std::vector<std::vector<int>> out;
  if (dim < 1 || max_order < 0) return out;
  for (int order = 0; order <= max_order; ++order) {
    // Enumerate compositions of `order` into `dim` nonnegative parts.
    std::vector<int> current(dim, 0);
    auto recurse = [&](auto&& self, int pos, int remaining) -> void {
      if (pos == dim - 1) {
        current[pos] = remaining;
        out.push_back(current);
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        current[pos] = v;
        self(self, pos + 1, remaining - v);
      }
    };
    recurse(recurse, 0, order);
  }
  return out;
}

namespace {

struct AxisRule {
  std::vector<double> x;
  std::vector<double> w;
};

AxisRule build_axis(const EquivalentKernel& ek, const QuadratureConfig& quad, int refine) {
  const double c_max = ek.c.maxCoeff();
  const double support = kernel_support_radius(ek.base.family);
  std::vector<double> edges;
  int panels = quad.panels_per_axis;
  if (std::isinf(support)) {
    const double radius = quad.radius > 0.0 ? quad.radius : 8.0 * c_max;
    if (panels <= 0) panels = ek.base.dim == 1 ? 64 : (ek.base.dim == 2 ? 32 : 12);
    panels *= refine;
    for (int p = 0; p <= panels; ++p) edges.push_back(-radius + 2.0 * radius * p / panels);
  } else {
    std::vector<double> kinks{0.0};
    for (Eigen::Index l = 0; l < ek.c.size(); ++l) {
      kinks.push_back(support * ek.c[l]);
      kinks.push_back(-support * ek.c[l]);
    }
    if (quad.radius > 0.0) {
      kinks.push_back(quad.radius);
      kinks.push_back(-quad.radius);
    }
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
    const int segments = static_cast<int>(kinks.size()) - 1;
    if (panels <= 0) panels = 16;
    const int sub = std::max(1, panels / std::max(1, segments)) * refine;
    for (int s = 0; s < segments; ++s) {
      for (int p = 0; p < sub; ++p) edges.push_back(kinks[s] + (kinks[s + 1] - kinks[s]) * p / sub);
    }
    edges.push_back(kinks.back());
  }
  std::vector<double> gx, gw;
  gauss_legendre(quad.nodes_per_panel, gx, gw);
  AxisRule rule;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double mid = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    for (std::size_t q = 0; q < gx.size(); ++q) {
      rule.x.push_back(mid + half * gx[q]);
      rule.w.push_back(half * gw[q]);
    }
  }
  return rule;
}

struct RawIntegrals {
  std::vector<double> value;
  std::vector<double> abs_value;
};

// Integrates u^alpha * Kbar(u) (or Kbar(u)^2 when `squared`) for each alpha.
RawIntegrals integrate(const EquivalentKernel& ek, const std::vector<std::vector<int>>& alphas,
                       const QuadratureConfig& quad, int refine, bool squared) {
  const int dim = ek.base.dim;
  const AxisRule rule = build_axis(ek, quad, refine);
  const std::size_t n = rule.x.size();
  const Eigen::Index levels = ek.c.size();
  int max_power = 0;
  for (const auto& a : alphas) max_power = std::max(max_power, *std::max_element(a.begin(), a.end()));

  // factor(l, i) = c_l^{-1} k(x_i / c_l); Kbar is a sum over l of products over axes.
  Matrix factor(levels, static_cast<Eigen::Index>(n));
  for (Eigen::Index l = 0; l < levels; ++l) {
    for (std::size_t i = 0; i < n; ++i) factor(l, i) = kernel_factor(ek.base.family, rule.x[i] / ek.c[l]) / ek.c[l];
  }
  Matrix powers(static_cast<Eigen::Index>(n), max_power + 1);
  for (std::size_t i = 0; i < n; ++i) {
    powers(i, 0) = 1.0;
    for (int p = 1; p <= max_power; ++p) powers(i, p) = powers(i, p - 1) * rule.x[i];
  }

  RawIntegrals out{std::vector<double>(alphas.size(), 0.0), std::vector<double>(alphas.size(), 0.0)};
  std::vector<double> comp(alphas.size(), 0.0);
  std::vector<std::size_t> idx(dim, 0);
  Vector level_prod(levels);
  while (true) {
    double weight = 1.0;
    level_prod.setOnes();
    for (int j = 0; j < dim; ++j) {
      weight *= rule.w[idx[j]];
      level_prod.array() *= factor.col(static_cast<Eigen::Index>(idx[j])).array();
    }
    double kbar = ek.lambdas.dot(level_prod);
    if (squared) kbar *= kbar;
    if (kbar != 0.0) {
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        double mono = 1.0;
        for (int j = 0; j < dim; ++j) mono *= powers(static_cast<Eigen::Index>(idx[j]), alphas[a][j]);
        const double term = weight * mono * kbar;
        // Neumaier summation; cancellations matter for vanishing moments.
        const double t = out.value[a] + term;
        if (std::abs(out.value[a]) >= std::abs(term)) {
          comp[a] += (out.value[a] - t) + term;
        } else {
          comp[a] += (term - t) + out.value[a];
        }
        out.value[a] = t;
        out.abs_value[a] += std::abs(term);
      }
    }
    int j = 0;
    while (j < dim && ++idx[j] == n) {
      idx[j] = 0;
      ++j;
    }
    if (j == dim) break;
  }
  for (std::size_t a = 0; a < alphas.size(); ++a) out.value[a] += comp[a];
  return out;
}

void validate(const EquivalentKernel& ek, const std::vector<std::vector<int>>& alphas, const QuadratureConfig& quad) {
  if (ek.base.dim < 1 || ek.base.dim > 3) throw ConfigError("moment quadrature supports dimensions 1 to 3");
  if (ek.lambdas.size() != ek.c.size() || ek.c.size() == 0 || (ek.c.array() <= 0.0).any()) {
    throw ConfigError("equivalent kernel needs matching lambda/c vectors with positive c");
  }
  if (quad.nodes_per_panel < 1) throw ConfigError("quadrature needs at least one node per panel");
  for (const auto& a : alphas) {
    if (static_cast<int>(a.size()) != ek.base.dim) throw ConfigError("multi-index dimension mismatch");
    int order = 0;
    for (int v : a) {
      if (v < 0) throw ConfigError("multi-index entries must be nonnegative");
      order += v;
    }
    if (order > quad.max_order) {
      throw ConfigError("moment order " + std::to_string(order) + " exceeds configured maximum " +
                        std::to_string(quad.max_order));
    }
  }
}

std::vector<MomentEstimate> estimate_moments(const EquivalentKernel& ek, const std::vector<std::vector<int>>& alphas,
                                             const QuadratureConfig& quad, bool squared) {
  validate(ek, alphas, quad);
  const RawIntegrals coarse = integrate(ek, alphas, quad, 1, squared);
  const RawIntegrals fine = integrate(ek, alphas, quad, 2, squared);
  std::vector<MomentEstimate> out;
  out.reserve(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    MomentEstimate m{alphas[a], fine.value[a], std::abs(fine.value[a] - coarse.value[a]), fine.abs_value[a]};
    if (!(m.error <= quad.tolerance * (1.0 + m.abs_integral))) {
      std::ostringstream msg;
      msg << "moment quadrature did not converge: error estimate " << m.error << " exceeds tolerance";
      throw NumericalError(msg.str());
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

MomentEstimate kernel_moment(const KernelSpec& spec, const std::vector<int>& alpha, const QuadratureConfig& quad) {
  return kernel_moment(as_equivalent_kernel(spec), alpha, quad);
}

MomentEstimate kernel_moment(const EquivalentKernel& ek, const std::vector<int>& alpha, const QuadratureConfig& quad) {
  return estimate_moments(ek, {alpha}, quad, false).front();
}

std::vector<MomentEstimate> moment_table(const EquivalentKernel& ek, int max_order, const QuadratureConfig& quad) {
  QuadratureConfig q = quad;
  q.max_order = std::max(q.max_order, max_order);
  return estimate_moments(ek, multi_indices(ek.base.dim, max_order), q, false);
}

MomentEstimate roughness_by_quadrature(const EquivalentKernel& ek, const QuadratureConfig& quad) {
  return estimate_moments(ek, {std::vector<int>(ek.base.dim, 0)}, quad, true).front();
}

}  // namespace pairdiff

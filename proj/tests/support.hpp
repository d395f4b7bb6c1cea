#pragma once

#include <cmath>
#include <random>

#include "pairdiff/data.hpp"
#include "pairdiff/dgp.hpp"
#include "pairdiff/rng.hpp"

namespace testing {

using pairdiff::Dataset;
using pairdiff::RowMatrix;
using pairdiff::Vector;

/// Random dataset with outcomes suited to `model`: real y for PLR, binary for
/// PLL, censored at zero for PLT.
inline Dataset random_dataset(std::mt19937_64& rng, int n, int k, int d, pairdiff::ModelId model) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector y(n);
  RowMatrix x(n, k);
  RowMatrix w(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) w(i, j) = normal(rng);
    for (int j = 0; j < k; ++j) x(i, j) = 0.5 * w(i, 0) + normal(rng);
    const double index = x.row(i).sum() * 0.7 + std::sin(w(i, 0)) + normal(rng);
    switch (model) {
      case pairdiff::ModelId::kPlr:
        y[i] = index;
        break;
      case pairdiff::ModelId::kPll:
        y[i] = index > 0.0 ? 1.0 : 0.0;
        break;
      case pairdiff::ModelId::kPlt:
        y[i] = std::max(index, 0.0);
        break;
    }
  }
  return Dataset(y, x, w);
}

// Reference losses written directly from their definitions, independent of
// the library's policy structs.

inline double ref_loss(pairdiff::ModelId model, double yi, double yj, double u) {
  switch (model) {
    case pairdiff::ModelId::kPlr:
      return 0.5 * std::pow((yi - yj) - u, 2);
    case pairdiff::ModelId::kPll: {
      if (yi == yj) return 0.0;
      const double p = 1.0 / (1.0 + std::exp(-u));
      return -(yi * std::log(p) + yj * std::log(1.0 - p));
    }
    case pairdiff::ModelId::kPlt: {
      if (yi > 0 && yj > 0) return std::abs(yi - yj - u) - std::abs(yi - yj);
      if (yi > 0) return std::max(yi - u, 0.0) - yi;
      if (yj > 0) return std::max(yj + u, 0.0) - yj;
      return 0.0;
    }
  }
  return 0.0;
}

/// Naive double loop over i < j with the kernel written out by hand.
inline double ref_kernel(pairdiff::KernelFamily family, const Vector& u, double h) {
  const double pi = 3.14159265358979323846;
  double v = 1.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double t = u[j] / h;
    switch (family) {
      case pairdiff::KernelFamily::kGaussian:
        v *= std::exp(-0.5 * t * t) / std::sqrt(2.0 * pi);
        break;
      case pairdiff::KernelFamily::kEpanechnikov:
        v *= std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
        break;
      case pairdiff::KernelFamily::kUniform:
        v *= std::abs(t) <= 0.5 ? 1.0 : 0.0;
        break;
    }
    v /= h;
  }
  return v;
}

inline double brute_force_objective(const Dataset& data, pairdiff::ModelId model, pairdiff::KernelFamily family,
                                    double h, const Vector& theta) {
  const Eigen::Index n = data.n();
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vector dw = (data.w().row(i) - data.w().row(j)).transpose();
      const Vector dx = (data.x().row(i) - data.x().row(j)).transpose();
      total += static_cast<long double>(ref_loss(model, data.y()[i], data.y()[j], dx.dot(theta)) *
                                        ref_kernel(family, dw, h));
    }
  }
  return static_cast<double>(total / (0.5L * n * (n - 1)));
}

/// Weighted least squares solved from the normal equations in long double.
inline Vector brute_force_plr(const Dataset& data, pairdiff::KernelFamily family, double h) {
  const Eigen::Index n = data.n();
  const Eigen::Index k = data.k();
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> g =
      Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>::Zero(k, k);
  Eigen::Matrix<long double, Eigen::Dynamic, 1> b = Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vector dw = (data.w().row(i) - data.w().row(j)).transpose();
      const Vector dx = (data.x().row(i) - data.x().row(j)).transpose();
      const long double kij = ref_kernel(family, dw, h);
      const auto dxl = dx.cast<long double>();
      g += kij * dxl * dxl.transpose();
      b += kij * dxl * static_cast<long double>(data.y()[i] - data.y()[j]);
    }
  }
  return g.fullPivLu().solve(b).cast<double>();
}

}  // namespace testing

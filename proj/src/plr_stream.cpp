#include "pairdiff/plr_stream.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pairdiff/error.hpp"
#include "pairdiff/objective.hpp"

namespace pairdiff {

std::vector<Vector> plr_closed_form_multi(const Dataset& data, const KernelSpec& spec, std::span<const double> hs) {
  if (spec.dim != data.d()) throw ConfigError("kernel dimension does not match w dimension");
  const Eigen::Index n = data.n();
  const Eigen::Index k = data.k();
  const int d = spec.dim;
  const std::size_t nb = hs.size();
  std::vector<ScaledKernel> kernels;
  kernels.reserve(nb);
  for (double h : hs) kernels.emplace_back(spec, h);

  // Per bandwidth: lower triangle of the Gram matrix, then the right-hand side.
  const std::size_t tri = static_cast<std::size_t>(k * (k + 1) / 2);
  const std::size_t stride = tri + static_cast<std::size_t>(k);
  std::vector<CompensatedSum> total(nb * stride);
  std::vector<double> row(nb * stride);
  std::vector<std::size_t> nonzero(nb, 0);

  const RowMatrix& x = data.x();
  const RowMatrix& w = data.w();
  const Vector& y = data.y();
  std::vector<double> dx(static_cast<std::size_t>(k));
  std::vector<double> dw(static_cast<std::size_t>(d));

  // Gaussian weights reuse one squared distance across bandwidths.
  const bool gaussian = spec.family == KernelFamily::kGaussian;
  std::vector<double> gauss_scale(nb);
  std::vector<double> gauss_norm(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    gauss_scale[b] = -0.5 / (hs[b] * hs[b]);
    gauss_norm[b] = std::pow(2.0 * std::numbers::pi, -0.5 * d) / std::pow(hs[b], d);
  }

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (int c = 0; c < d; ++c) {
        dw[static_cast<std::size_t>(c)] = w(i, c) - w(j, c);
        sq += dw[static_cast<std::size_t>(c)] * dw[static_cast<std::size_t>(c)];
      }
      for (Eigen::Index c = 0; c < k; ++c) dx[static_cast<std::size_t>(c)] = x(i, c) - x(j, c);
      const double dy = y[i] - y[j];
      for (std::size_t b = 0; b < nb; ++b) {
        const double kij = gaussian ? gauss_norm[b] * std::exp(gauss_scale[b] * sq) : kernels[b](dw.data());
        if (kij == 0.0) continue;
        ++nonzero[b];
        double* acc = row.data() + b * stride;
        std::size_t t = 0;
        for (Eigen::Index r = 0; r < k; ++r) {
          const double wr = kij * dx[static_cast<std::size_t>(r)];
          for (Eigen::Index c = 0; c <= r; ++c) acc[t++] += wr * dx[static_cast<std::size_t>(c)];
        }
        for (Eigen::Index r = 0; r < k; ++r) acc[tri + static_cast<std::size_t>(r)] += kij * dx[static_cast<std::size_t>(r)] * dy;
      }
    }
    for (std::size_t e = 0; e < row.size(); ++e) total[e].add(row[e]);
  }

  const double norm = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  std::vector<Vector> out;
  out.reserve(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    if (nonzero[b] == 0) {
      throw NumericalError("no usable pairs: every kernel weight is zero at h = " + std::to_string(hs[b]));
    }
    Matrix g(k, k);
    Vector rhs(k);
    std::size_t t = 0;
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) g(r, c) = g(c, r) = total[b * stride + t++].value() * norm;
    }
    for (Eigen::Index r = 0; r < k; ++r) rhs[r] = total[b * stride + tri + static_cast<std::size_t>(r)].value() * norm;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()[0];
    if (!(lo > 0.0) || eig.eigenvalues()[k - 1] / lo > 1e12) {
      throw NumericalError("weighted Gram matrix is singular or ill-conditioned at h = " + std::to_string(hs[b]));
    }
    const Eigen::LLT<Matrix> llt(g);
    Vector theta = llt.solve(rhs);
    theta += llt.solve(rhs - g * theta);
    out.push_back(std::move(theta));
  }
  return out;
}

}  // namespace pairdiff

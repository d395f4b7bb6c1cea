#include "pairdiff/data.hpp"

#include <cstring>
#include <string>

#include "pairdiff/error.hpp"

namespace pairdiff {

Dataset::Dataset(Vector y, RowMatrix x, RowMatrix w) : y_(std::move(y)), x_(std::move(x)), w_(std::move(w)) {
  if (y_.size() < 2) throw DataError("a dataset needs at least 2 observations (got " + std::to_string(y_.size()) + ")");
  if (x_.rows() != y_.size() || w_.rows() != y_.size()) throw DataError("y, x and w must have the same number of rows");
  if (x_.cols() < 1) throw DataError("a dataset needs at least one regressor column");
  if (w_.cols() < 1) throw DataError("a dataset needs at least one kernel covariate column");
  if (!y_.allFinite() || !x_.allFinite() || !w_.allFinite()) throw DataError("dataset contains non-finite values");
}

Observation Dataset::observation(Eigen::Index i) const {
  return Observation{y_[i], x_.row(i).transpose(), w_.row(i).transpose()};
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& index) const {
  const auto m = static_cast<Eigen::Index>(index.size());
  Vector y(m);
  RowMatrix x(m, k());
  RowMatrix w(m, d());
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index src = index[static_cast<std::size_t>(r)];
    y[r] = y_[src];
    x.row(r) = x_.row(src);
    w.row(r) = w_.row(src);
  }
  return Dataset(std::move(y), std::move(x), std::move(w));
}

std::uint64_t Dataset::w_fingerprint() const {
  // FNV-1a over the raw bytes.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(w_.data());
  const std::size_t count = static_cast<std::size_t>(w_.size()) * sizeof(double);
  for (std::size_t b = 0; b < count; ++b) {
    hash ^= bytes[b];
    hash *= 0x100000001b3ULL;
  }
  return hash ^ static_cast<std::uint64_t>(w_.rows());
}

}  // namespace pairdiff

#pragma once

#include <cstdint>
#include <vector>

#include "pairdiff/types.hpp"

namespace pairdiff {

/// z_i = (y_i, x_i', w_i')'.
struct Observation {
  double y = 0.0;
  Vector x;
  Vector w;
};

/// Immutable sample. x is n-by-k, w is n-by-d, both row-major so that the
/// pair loops read contiguous rows.
class Dataset {
 public:
  Dataset() = default;
  /// Validates shapes, n >= 2 and finiteness; throws DataError otherwise.
  Dataset(Vector y, RowMatrix x, RowMatrix w);

  Eigen::Index n() const { return y_.size(); }
  Eigen::Index k() const { return x_.cols(); }
  Eigen::Index d() const { return w_.cols(); }

  const Vector& y() const { return y_; }
  const RowMatrix& x() const { return x_; }
  const RowMatrix& w() const { return w_; }

  Observation observation(Eigen::Index i) const;

  /// Rows selected by `index` (with repetition), as used by the bootstrap.
  Dataset subset(const std::vector<Eigen::Index>& index) const;

  /// Order-sensitive hash of the w block, used to pair weights with data.
  std::uint64_t w_fingerprint() const;

 private:
  Vector y_;
  RowMatrix x_;
  RowMatrix w_;
};

}  // namespace pairdiff

#pragma once

#include <span>
#include <vector>

#include "pairdiff/data.hpp"
#include "pairdiff/kernel.hpp"

namespace pairdiff {

/// Closed-form PLR estimates at every bandwidth in `hs` from a single pass
/// over the pairs, without storing them. Row partial sums are combined with
/// compensated addition, so results agree with solve_plr_closed_form to
/// rounding. Throws NumericalError when any Gram matrix is unusable.
std::vector<Vector> plr_closed_form_multi(const Dataset& data, const KernelSpec& spec, std::span<const double> hs);

}  // namespace pairdiff

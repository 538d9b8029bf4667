#pragma once

#include <functional>
#include <span>

#include "mdepth/tensor.hpp"

namespace mdepth {

// Compares analytic gradients against central finite differences.
//
// `build` must construct a fresh forward graph over the given parameter
// tensors and return the scalar root. It is called once with recording on for
// the analytic pass and repeatedly under NoGradGuard for the difference
// quotients. Inputs should stay away from relu/maxpool kinks by more than
// `epsilon`, and the forward must be deterministic (no live dropout).
//
// Returns the worst relative discrepancy |a-n| / max(|a|,|n|) over every
// parameter element (absolute difference where both are ~0).
double gradcheck(const std::function<TensorPtr()>& build,
                 std::span<const TensorPtr> params, double epsilon = 1e-5);

}  // namespace mdepth

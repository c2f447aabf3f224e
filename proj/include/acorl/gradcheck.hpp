// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "acorl/tape.hpp"

namespace acorl {

struct GradcheckReport {
  double max_rel_err = 0.0;
  int primitive_cases = 0;
  int compositions = 0;
};

// Central-difference verification of every differentiable primitive at
// safe inputs plus `n_compositions` random compositions (depth <= 6)
// replayed structurally for each perturbed evaluation. Compositions with
// intermediate values near a relu/clamp kink or overflowing are redrawn.
GradcheckReport run_gradcheck(std::uint64_t seed, int n_compositions, double eps = 1e-5);

// Builds random graphs twice, with and without a grad_reverse(., lambda)
// node applied to the input, and returns the maximum absolute deviation of
// grad_with + lambda * grad_without over `n_graphs` graphs.
double grl_equivalence_max_dev(std::uint64_t seed, int n_graphs, double lambda);

}  // namespace acorl

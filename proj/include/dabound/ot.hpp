#pragma once

#include "dabound/dataset.hpp"

namespace dab {

// Exact W1 under the Euclidean ground metric, solved as a transportation
// problem by successive shortest paths with potentials.
//
// Precision contract: ground distances are quantized upward to integer
// multiples of 1e-9 before solving, so the reported cost is exact for the
// quantized instance and lies in [W1, W1 + 1e-9] for the real one. Rounding
// up keeps the value on the safe side of every bound it enters.
struct ExactOtResult {
  double cost = 0.0;
  int augmentations = 0;
};

ExactOtResult wasserstein1_exact_cost(const UnlabeledView& a, const UnlabeledView& b);

struct SinkhornOptions {
  double reg = 1e-3;
  int max_iter = 20000;
  double tol = 1e-9;          // L1 marginal violation
  bool eps_scaling = true;    // anneal reg from max(1, reg) down to reg
};

struct SinkhornResult {
  double cost = 0.0;          // cost of the plan rounded onto the feasible polytope
  int iterations = 0;
  double marginal_violation = 0.0;  // pre-rounding L1 violation
  bool converged = false;
};

// Entropic-regularized transport with log-domain stabilized updates. The
// returned cost is evaluated on a plan rounded to satisfy both marginals
// exactly, so it is a certified upper bound on the exact transport cost.
SinkhornResult sinkhorn_w1(const UnlabeledView& a, const UnlabeledView& b, const SinkhornOptions& opts);

}  // namespace dab

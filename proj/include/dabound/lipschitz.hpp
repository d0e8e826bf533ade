#pragma once

#include "dabound/hypothesis.hpp"

namespace dab {

// Per-layer spectral norm bounds; K is their product. Hidden activations
// (leaky-rectifier, clamp) are 1-Lipschitz so they do not enter the product.
struct LipschitzCertificate {
  double k = 0.0;
  std::vector<double> per_layer;
};

// Largest singular value by power iteration (50 iterations, tol 1e-10).
// The start vector is seeded from the layer index only, so certificates are
// reproducible no matter where they are computed.
double spectral_norm(std::span<const double> w, int rows, int cols, int layer_index);

LipschitzCertificate lipschitz_bound(const MlpHypothesis& h);
LipschitzCertificate lipschitz_bound(const LinearHypothesis& h);
LipschitzCertificate lipschitz_bound(const Hypothesis& h);

// Rescales weight matrices so each layer's spectral norm is at most
// k_target^(1/L); a hypothesis already within k_target is returned unchanged.
MlpHypothesis project_lipschitz(const MlpHypothesis& h, double k_target);
LinearHypothesis project_lipschitz(const LinearHypothesis& h, double k_target);

// In-place layer projection on a flat parameter vector (used after each
// optimizer step when training under a Lipschitz budget).
void project_params_lipschitz(const MlpArch& arch, std::vector<double>& params, double k_target);

}  // namespace dab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dabound/dataset.hpp"

namespace dab {

enum class GenKind { gaussian_pair, mixup_swap, prior_shift, confounder, invariance_flip };

std::string gen_kind_name(GenKind k);
GenKind gen_kind_from_name(const std::string& s);

// Everything the generators need, with kind-specific fields. Cluster layout
// depends on the kind: gaussian_pair and mixup_swap put class c at magnitude
// (c + center_offset) * spacing on axis (c mod dim); prior_shift uses a ring
// of radius 2 * spacing in the first two coordinates (dim >= 2);
// invariance_flip uses radius-2*spacing clusters on angularly separated
// directions, or +/- spacing/2 on axis 0 with symmetric_layout.
struct GeneratorSpec {
  GenKind kind = GenKind::gaussian_pair;
  int dim = 1;
  int num_classes = 2;
  int n_per_class = 20;
  double sigma = 0.05;
  double shift = 0.0;                // gaussian_pair: translation along axis 0
  double spacing = 1.0;
  double center_offset = 0.0;        // gaussian_pair/prior_shift magnitude offset
  std::vector<double> ratios;        // prior_shift; empty = ramp 0.05..0.20 normalized
  int distractor_axes = 1;           // confounder: axes copying the (shuffled) label signal
  bool symmetric_layout = false;     // invariance_flip, binary: centers at +/- spacing/2
  // prior_shift: draw the target as an independent sample of the same cluster
  // distributions instead of reusing the source support. Keeps P(X|Y) equal
  // in distribution while making the supports point-disjoint, which is what
  // gradient-driven alignment needs to act on at all.
  bool fresh_target_sample = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ramp over classes from lo to hi, normalized to a simplex.
std::vector<double> ramp_ratios(int num_classes, double lo = 0.05, double hi = 0.20);

TransferInstance gen_gaussian_pair(const GeneratorSpec& spec);
TransferInstance gen_mixup_swap(const GeneratorSpec& spec);
TransferInstance gen_prior_shift(const GeneratorSpec& spec);
TransferInstance gen_confounder(const GeneratorSpec& spec);
TransferInstance gen_invariance_flip(const GeneratorSpec& spec);

TransferInstance generate(const GeneratorSpec& spec);

}  // namespace dab

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dabound/common.hpp"

namespace dab {

// Finite weighted sample set in R^d with integer labels. Doubles as an exact
// finite-support distribution: weights are probability masses summing to 1,
// so every expectation over it is a finite weighted sum.
struct LabeledDataset {
  std::vector<double> xs;  // row-major, size() * dim
  std::vector<int> labels;
  std::vector<double> weights;
  int dim = 0;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  VecView point(std::size_t i) const { return {xs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }

  double class_mass(int c) const;
  // Throws ValidationError if any invariant is broken.
  void validate() const;
};

// Points and weights of a dataset with labels stripped. This is the only
// shape training code is allowed to see of a target domain.
struct UnlabeledView {
  std::vector<double> xs;
  std::vector<double> weights;
  int dim = 0;

  std::size_t size() const { return weights.size(); }
  VecView point(std::size_t i) const { return {xs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }
};

UnlabeledView unlabeled(const LabeledDataset& ds);

enum class ShiftKind { covariate, prior_shift, mixup, confounder, invariance };

std::string shift_kind_name(ShiftKind k);
ShiftKind shift_kind_from_name(const std::string& name);

// A (source, target) pair. Target labels are quarantined: training code gets
// target_unlabeled(), only evaluation code may call target_eval().
class TransferInstance {
 public:
  LabeledDataset source;
  ShiftKind shift_kind = ShiftKind::covariate;
  std::uint64_t seed = 0;

  TransferInstance() = default;
  TransferInstance(LabeledDataset src, LabeledDataset tgt, ShiftKind kind, std::uint64_t s)
      : source(std::move(src)), shift_kind(kind), seed(s), target_(std::move(tgt)) {}

  UnlabeledView target_unlabeled() const { return unlabeled(target_); }
  // Evaluation-only access to target labels.
  const LabeledDataset& target_eval() const { return target_; }

  int dim() const { return source.dim; }
  int num_classes() const { return source.num_classes; }
  void validate() const;

 private:
  LabeledDataset target_;
};

// CSV format: header "x0,...,x{d-1},label[,weight]", one sample per row.
// A missing weight column means uniform weights. Errors name the line.
LabeledDataset load_dataset(const std::string& path);
void save_dataset(const LabeledDataset& ds, const std::string& path);

// JSON manifest {"source": path, "target": path, "shift_kind": str, "seed": int}.
// Dataset paths are resolved relative to the manifest's directory.
TransferInstance load_instance(const std::string& manifest_path);
void save_instance(const TransferInstance& inst, const std::string& dir, const std::string& stem);

// Reweights (never subsamples) class mass to the requested ratios, leaving
// every within-class conditional untouched. `seed` is part of the signature
// for uniformity with the other seeded operations; the reweighting itself is
// closed-form and does not consume randomness.
LabeledDataset resample_prior(const LabeledDataset& ds, std::span<const double> class_ratios, std::uint64_t seed);

// Disjoint seeded split; each side renormalized to total mass 1.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double fraction, std::uint64_t seed);

}  // namespace dab

#pragma once

#include <optional>
#include <string>

#include "dabound/dataset.hpp"
#include "dabound/hypothesis.hpp"
#include "dabound/ot.hpp"
#include "dabound/train.hpp"

namespace dab {

enum class DivMethod { exact_enum, adversarial, exact_ot, sinkhorn };
enum class DivStatus { optimal, lower_bound, upper_bound };

std::string div_method_name(DivMethod m);
std::string div_status_name(DivStatus s);

// A divergence value with how it was obtained and on which side of the true
// quantity it is guaranteed to sit.
struct DivergenceEstimate {
  double value = 0.0;
  DivMethod method = DivMethod::exact_enum;
  DivStatus status = DivStatus::optimal;
  int iterations = 0;
  double final_objective = 0.0;
  std::string json() const;
};

// sup over ordered pairs (h, h') in the class of eps_T(h,h') - eps_S(h,h').
// Asymmetric by definition; >= 0 since the diagonal pair attains 0.
DivergenceEstimate hdh_divergence_exact(const FiniteClass& cls, const UnlabeledView& sx,
                                        const UnlabeledView& tx);

// Same sup with the first hypothesis fixed.
DivergenceEstimate single_hyp_discrepancy_exact(const Hypothesis& h, const FiniteClass& cls,
                                                const UnlabeledView& sx, const UnlabeledView& tx);

// sup over pairs of |eps_S(h,h') - eps_T(h,h')|; symmetric.
DivergenceEstimate mansour_discrepancy(const FiniteClass& cls, const UnlabeledView& sx,
                                       const UnlabeledView& tx);

// Alternating full-batch gradient ascent of a smoothed disagreement gap
// (product of tanh margins) over two binary MLP discriminators. The reported
// value is the exact 0-1 objective of the best pair found, hence a certified
// lower bound on the sup. Binary families only.
struct AdversarialConfig {
  MlpArch arch;           // single raw output; decision is sign
  int blocks = 30;        // alternation rounds
  int steps_per_block = 5;
  double lr = 0.5;
  int restarts = 3;
};

DivergenceEstimate hdh_divergence_adversarial(const AdversarialConfig& cfg, const UnlabeledView& sx,
                                              const UnlabeledView& tx, std::uint64_t seed);
DivergenceEstimate single_hyp_discrepancy_adversarial(const Hypothesis& h, const AdversarialConfig& cfg,
                                                      const UnlabeledView& sx, const UnlabeledView& tx,
                                                      std::uint64_t seed);

DivergenceEstimate wasserstein1_exact(const UnlabeledView& sx, const UnlabeledView& tx);
DivergenceEstimate wasserstein1_sinkhorn(const UnlabeledView& sx, const UnlabeledView& tx,
                                         double reg, int max_iter = 20000, double tol = 1e-9);

// Joint-error term: inf over hypotheses of eps_S(h) + eps_T(h). Target labels
// are read here by design; this is a diagnostics oracle, never a training
// signal.
struct LambdaEstimate {
  double value = 0.0;
  DivStatus status = DivStatus::optimal;
  int witness_index = -1;          // for the exact path
  std::optional<MlpHypothesis> witness;  // for the trained path
};

LambdaEstimate lambda_estimate_exact(const FiniteClass& cls, const LabeledDataset& source,
                                     const LabeledDataset& target_eval);
// Trained minimizer over a parametric family; an upper bound on the true
// inf. `opt.loss` selects 0-1(via cross-entropy training) or L1 semantics.
LambdaEstimate lambda_estimate_trained(const MlpArch& arch, const LabeledDataset& source,
                                       const LabeledDataset& target_eval, const OptConfig& opt,
                                       int restarts, std::uint64_t seed);

}  // namespace dab

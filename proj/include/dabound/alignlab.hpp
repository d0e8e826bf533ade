#pragma once

#include <string>
#include <vector>

#include "dabound/dataset.hpp"
#include "dabound/hypothesis.hpp"

namespace dab {

enum class AlignMethod { source_only, dann, mdd, wdgrl };

std::string align_method_name(AlignMethod m);
AlignMethod align_method_from_name(const std::string& s);

struct AlignConfig {
  AlignMethod method = AlignMethod::source_only;
  double weight = 1.0;  // trade-off on the alignment term; 0 degenerates to source_only
  std::vector<int> psi_hidden = {16};
  int latent_dim = 2;
  std::vector<int> head_hidden = {};
  std::vector<int> critic_hidden = {8};
  int steps = 300;
  double lr_model = 0.2;
  double lr_critic = 0.2;
  int critic_steps = 5;  // adversary updates per model update
  double critic_decay = 1e-3;  // L2 shrinkage per adversary step; bounds the min-max
  double model_grad_clip = 10.0;  // norm clip on encoder/head updates; 0 disables
  std::uint64_t seed = 0;
  // Optional warm start for the encoder (e.g. a pretrained body); must match
  // the encoder's parameter count when nonempty.
  std::vector<double> psi_init;

  void validate() const;
};

// Encoder (raw latent output) plus classifier head on the latent space.
struct RepClassifier {
  MlpHypothesis psi;
  MlpHypothesis head;
  int latent_dim = 0;

  std::vector<double> encode(VecView x) const;
  int predict(VecView x) const;
};

struct TraceRow {
  int step = 0;
  double source_ce = 0.0;
  double align_term = 0.0;   // method-specific alignment signal seen by the encoder
  double critic_loss = 0.0;
  double hard_disparity = 0.0;  // mdd: exact 0-1 disparity of the adversary pair
};

struct TrainingTrace {
  std::string method;
  std::vector<TraceRow> rows;
  bool critic_collapse = false;
};

// Representation + classifier training under one of the alignment methods.
// Target data enters exclusively as an unlabeled view.
std::pair<RepClassifier, TrainingTrace> train_aligned(const TransferInstance& inst, const AlignConfig& cfg);

struct EvalResult {
  double source_acc = 0.0;
  double target_acc = 0.0;
};

EvalResult evaluate(const RepClassifier& model, const TransferInstance& inst);

// Fraction of target mass whose nearest source point in latent space carries
// a different true label (distance ties resolved to the smallest index).
double label_mixing_score(const RepClassifier& model, const TransferInstance& inst);

// Weighted target accuracy of a K-nearest-source-neighbor vote in feature
// space. Neighborhoods are defined by the K-th smallest distance including
// ties, so the result is invariant to source point order; label votes are
// weighted by source mass, vote ties go to the smallest label.
double knn_probe(const TransferInstance& inst, int k, const MlpHypothesis* encoder = nullptr);

}  // namespace dab

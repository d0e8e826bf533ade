#pragma once

#include <string>
#include <variant>
#include <vector>

#include "dabound/dataset.hpp"
#include "dabound/mlp.hpp"

namespace dab {

struct ConstantHypothesis {
  int label = 0;
};

// 1[x[axis] >= tau], optionally flipped. Covers threshold classes and their
// complements for exact enumeration work.
struct ThresholdHypothesis {
  int axis = 0;
  double tau = 0.0;
  bool flip = false;
};

// Explicit labeling of a small enumerated domain; prediction is by nearest
// domain point (exact match on the intended finite domains).
struct TableHypothesis {
  std::vector<double> domain_xs;  // row-major, n * dim
  int dim = 1;
  std::vector<int> outputs;
};

// Multiclass rule reading a single coordinate: label = argmin_c
// |x[axis] - prototypes[c]|, ties to the smallest label.
struct AxisPrototypeHypothesis {
  int axis = 0;
  std::vector<double> prototypes;
};

// Binary linear rule: label 1 iff w.x + b >= 0; l1 score clamp(w.x + b, 0, 1).
struct LinearHypothesis {
  std::vector<double> w;
  double b = 0.0;
};

struct MlpHypothesis {
  MlpArch arch;
  std::vector<double> params;
};

using Hypothesis = std::variant<ConstantHypothesis, ThresholdHypothesis, TableHypothesis,
                                AxisPrototypeHypothesis, LinearHypothesis, MlpHypothesis>;

int predict_label(const Hypothesis& h, VecView x);
// Real score in [0, 1] for L1-mode hypotheses (Linear or l1-mode Mlp).
double predict_score(const Hypothesis& h, VecView x);
bool has_score(const Hypothesis& h);

// Explicitly enumerated hypothesis class; the substrate for exact sup/inf
// computations.
struct FiniteClass {
  std::string name;
  std::vector<Hypothesis> members;

  std::size_t size() const { return members.size(); }
  void validate() const;
};

// Exact weighted mean of 1[h(x) != y].
double risk01(const Hypothesis& h, const LabeledDataset& data);
// Exact weighted mean of 1[h(x) != h'(x)]; symmetric.
double disagreement(const Hypothesis& h, const Hypothesis& hp, const LabeledDataset& data);
double disagreement(const Hypothesis& h, const Hypothesis& hp, const UnlabeledView& view);
// Exact weighted mean of |h(x) - y| for binary-labeled data and a scoring h.
double risk_l1(const Hypothesis& h, const LabeledDataset& data);

// Tabulated labels of h over a view's support, for enumeration kernels.
std::vector<int> predict_all(const Hypothesis& h, const UnlabeledView& view);

// JSON round-trip for parametric hypotheses: {"arch": [...], "params": [...], "mode": "hard"|"l1"}.
std::string hypothesis_to_json(const MlpHypothesis& h);
MlpHypothesis hypothesis_from_json(const std::string& text);

}  // namespace dab

#pragma once

#include <cstdint>

#include "dabound/dataset.hpp"
#include "dabound/hypothesis.hpp"
#include "dabound/mlp.hpp"

namespace dab {

enum class LossKind { cross_entropy, l1 };

struct OptConfig {
  int steps = 200;
  double lr = 0.1;
  double momentum = 0.0;
  int batch = 0;  // 0 = full support, otherwise weighted minibatch size
  LossKind loss = LossKind::cross_entropy;
  double project_k = 0.0;  // > 0: spectral projection to this K after every step
};

// Loss hook for a labeled batch. For cross_entropy the targets are class ids
// against softmax logits; for l1 they are binary labels against the clamped
// scalar output.
OutputGradFn make_loss_fn(LossKind loss, std::span<const int> labels);

// Exact gradient of the weighted batch loss at `params`.
std::vector<double> mlp_grad(const MlpArch& arch, std::span<const double> params,
                             const LabeledDataset& batch, LossKind loss);
double mlp_loss(const MlpArch& arch, std::span<const double> params,
                const LabeledDataset& batch, LossKind loss);

// Plain SGD (optional momentum, optional per-step spectral projection),
// seeded and deterministic. Throws NumericError with the step index if the
// loss diverges.
MlpHypothesis train_supervised(const MlpArch& arch, const LabeledDataset& data,
                               const OptConfig& opt, std::uint64_t seed);

// Same loop but starting from given parameters.
std::vector<double> sgd_from(const MlpArch& arch, std::vector<double> params,
                             const LabeledDataset& data, const OptConfig& opt, std::uint64_t seed);

}  // namespace dab

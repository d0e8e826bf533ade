#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dabound/common.hpp"

namespace dab {

// Output convention of a parametric hypothesis.
//   hard: the last layer emits one logit per class, the decision is argmax.
//   l1:   the last layer emits a single real score clamped to [0, 1].
enum class OutputMode { hard, l1 };

std::string output_mode_name(OutputMode m);
OutputMode output_mode_from_name(const std::string& s);

// Dense feedforward net: layers = [in, hidden..., out], leaky-rectifier
// (slope 0.01) on hidden layers, raw affine output. Parameters are stored
// flat, per layer: row-major weight matrix (out x in), then bias.
struct MlpArch {
  std::vector<int> layers;
  OutputMode mode = OutputMode::hard;

  int input_dim() const { return layers.front(); }
  int output_dim() const { return layers.back(); }
  int num_layers() const { return static_cast<int>(layers.size()) - 1; }
  int param_count() const;
  // Offset of layer l's weight block; bias follows the weights.
  int layer_offset(int l) const;
  void validate() const;
};

constexpr double kLeakySlope = 0.01;

// Seeded parameter init: weights scaled by 1/sqrt(fan_in), zero biases.
std::vector<double> init_params(const MlpArch& arch, std::uint64_t seed);

// Forward pass to the raw output layer (logits / unclamped score).
void mlp_forward(const MlpArch& arch, std::span<const double> params, VecView x, std::vector<double>& out);

// Per-example loss hook for the batch backward pass: receives the example
// index and raw outputs z, writes dLoss/dz, returns the example's loss.
using OutputGradFn = std::function<double(std::size_t i, std::span<const double> z, std::span<double> dz)>;

struct BackpropResult {
  double loss = 0.0;                 // weighted mean of per-example losses
  std::vector<double> param_grad;    // d(loss)/d(params)
  std::vector<double> input_grad;    // n * in_dim, filled when requested
};

// Exact reverse-mode gradient of the weighted mean loss over a batch.
// `xs` is row-major n x in_dim; `weights` are nonnegative batch weights
// (normalized internally by their sum). An empty `weights` span selects raw
// mode: per-example losses and output gradients are summed as supplied,
// which is what chaining through a downstream network's input gradients
// needs.
BackpropResult mlp_backprop(const MlpArch& arch, std::span<const double> params,
                            std::span<const double> xs, std::span<const double> weights,
                            std::size_t n, const OutputGradFn& fn, bool want_input_grad = false);

}  // namespace dab

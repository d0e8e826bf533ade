#include "dabound/mlp.hpp"

#include <cmath>

#include "dabound/rng.hpp"

namespace dab {

std::string output_mode_name(OutputMode m) { return m == OutputMode::hard ? "hard" : "l1"; }

OutputMode output_mode_from_name(const std::string& s) {
  if (s == "hard") return OutputMode::hard;
  if (s == "l1") return OutputMode::l1;
  throw ValidationError("unknown output mode '" + s + "'");
}

int MlpArch::param_count() const {
  int total = 0;
  for (int l = 0; l + 1 < static_cast<int>(layers.size()); ++l)
    total += layers[l + 1] * (layers[l] + 1);
  return total;
}

int MlpArch::layer_offset(int l) const {
  int off = 0;
  for (int k = 0; k < l; ++k) off += layers[k + 1] * (layers[k] + 1);
  return off;
}

void MlpArch::validate() const {
  if (layers.size() < 2) throw ValidationError("arch needs at least input and output layers");
  for (int w : layers)
    if (w <= 0) throw ValidationError("arch layer widths must be positive");
  if (mode == OutputMode::l1 && layers.back() != 1)
    throw ValidationError("l1 output mode requires a single output unit");
}

std::vector<double> init_params(const MlpArch& arch, std::uint64_t seed) {
  arch.validate();
  std::vector<double> params(arch.param_count());
  Rng rng(seed);
  int off = 0;
  for (int l = 0; l < arch.num_layers(); ++l) {
    const int in = arch.layers[l], out = arch.layers[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < out * in; ++i) params[off + i] = scale * rng.normal();
    for (int i = 0; i < out; ++i) params[off + out * in + i] = 0.0;
    off += out * (in + 1);
  }
  // l1 mode: start the output mid-range so the clamp's zero-gradient
  // plateaus cannot trap the whole net at initialization
  if (arch.mode == OutputMode::l1) params[arch.param_count() - 1] = 0.5;
  return params;
}

void mlp_forward(const MlpArch& arch, std::span<const double> params, VecView x, std::vector<double>& out) {
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  int off = 0;
  for (int l = 0; l < arch.num_layers(); ++l) {
    const int in = arch.layers[l], width = arch.layers[l + 1];
    next.assign(width, 0.0);
    const double* W = params.data() + off;
    const double* b = W + width * in;
    for (int r = 0; r < width; ++r) {
      double z = b[r];
      const double* row = W + r * in;
      for (int c = 0; c < in; ++c) z += row[c] * cur[c];
      next[r] = (l + 1 < arch.num_layers() && z < 0.0) ? kLeakySlope * z : z;
    }
    cur.swap(next);
    off += width * (in + 1);
  }
  out = cur;
}

BackpropResult mlp_backprop(const MlpArch& arch, std::span<const double> params,
                            std::span<const double> xs, std::span<const double> weights,
                            std::size_t n, const OutputGradFn& fn, bool want_input_grad) {
  const int L = arch.num_layers();
  const int in_dim = arch.input_dim();
  BackpropResult res;
  res.param_grad.assign(arch.param_count(), 0.0);
  if (want_input_grad) res.input_grad.assign(n * in_dim, 0.0);

  const bool raw = weights.empty();
  double weight_sum = 1.0;
  if (!raw) {
    weight_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) weight_sum += weights[i];
    if (!(weight_sum > 0.0)) throw ValidationError("batch has zero total weight");
  }

  // Per-example activations: acts[l] holds layer l's output (acts[0] = x).
  std::vector<std::vector<double>> acts(L + 1);
  std::vector<std::vector<double>> preacts(L + 1);  // pre-activation z per layer >= 1
  std::vector<double> dz, dprev;

  for (std::size_t i = 0; i < n; ++i) {
    const double wi = raw ? 1.0 : weights[i] / weight_sum;
    acts[0].assign(xs.begin() + i * in_dim, xs.begin() + (i + 1) * in_dim);
    int off = 0;
    for (int l = 0; l < L; ++l) {
      const int in = arch.layers[l], width = arch.layers[l + 1];
      preacts[l + 1].assign(width, 0.0);
      acts[l + 1].assign(width, 0.0);
      const double* W = params.data() + off;
      const double* b = W + width * in;
      for (int r = 0; r < width; ++r) {
        double z = b[r];
        const double* row = W + r * in;
        for (int c = 0; c < in; ++c) z += row[c] * acts[l][c];
        preacts[l + 1][r] = z;
        acts[l + 1][r] = (l + 1 < L && z < 0.0) ? kLeakySlope * z : z;
      }
      off += width * (in + 1);
    }

    dz.assign(arch.output_dim(), 0.0);
    const double li = fn(i, acts[L], dz);
    if (!std::isfinite(li)) throw NumericError("non-finite loss on example " + std::to_string(i));
    res.loss += wi * li;

    // Backward through layers.
    for (int l = L - 1; l >= 0; --l) {
      const int in = arch.layers[l], width = arch.layers[l + 1];
      const int off_l = arch.layer_offset(l);
      const double* W = params.data() + off_l;
      double* gW = res.param_grad.data() + off_l;
      double* gb = gW + width * in;
      dprev.assign(in, 0.0);
      for (int r = 0; r < width; ++r) {
        double g = dz[r];
        if (l + 1 < L && preacts[l + 1][r] < 0.0) g *= kLeakySlope;
        gb[r] += wi * g;
        const double* row = W + r * in;
        double* grow = gW + r * in;
        for (int c = 0; c < in; ++c) {
          grow[c] += wi * g * acts[l][c];
          dprev[c] += g * row[c];
        }
      }
      dz.swap(dprev);
    }
    if (want_input_grad)
      for (int c = 0; c < in_dim; ++c) res.input_grad[i * in_dim + c] = wi * dz[c];
  }
  return res;
}

}  // namespace dab

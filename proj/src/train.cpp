#include "dabound/train.hpp"

#include <algorithm>
#include <cmath>

#include "dabound/lipschitz.hpp"
#include "dabound/rng.hpp"

namespace dab {

OutputGradFn make_loss_fn(LossKind loss, std::span<const int> labels) {
  if (loss == LossKind::cross_entropy) {
    return [labels](std::size_t i, std::span<const double> z, std::span<double> dz) {
      const int y = labels[i];
      double zmax = z[0];
      for (double v : z) zmax = std::max(zmax, v);
      double sum = 0.0;
      for (std::size_t c = 0; c < z.size(); ++c) sum += std::exp(z[c] - zmax);
      const double lse = zmax + std::log(sum);
      for (std::size_t c = 0; c < z.size(); ++c) dz[c] = std::exp(z[c] - lse);
      dz[y] -= 1.0;
      return lse - z[y];
    };
  }
  return [labels](std::size_t i, std::span<const double> z, std::span<double> dz) {
    const double y = static_cast<double>(labels[i]);
    const double s = std::clamp(z[0], 0.0, 1.0);
    const double diff = s - y;
    // Clamp saturation and exact fit both give a zero (sub)gradient.
    double g = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    if (z[0] <= 0.0 || z[0] >= 1.0) g = 0.0;
    dz[0] = g;
    return std::abs(diff);
  };
}

std::vector<double> mlp_grad(const MlpArch& arch, std::span<const double> params,
                             const LabeledDataset& batch, LossKind loss) {
  auto fn = make_loss_fn(loss, batch.labels);
  auto res = mlp_backprop(arch, params, batch.xs, batch.weights, batch.size(), fn);
  return std::move(res.param_grad);
}

double mlp_loss(const MlpArch& arch, std::span<const double> params,
                const LabeledDataset& batch, LossKind loss) {
  auto fn = make_loss_fn(loss, batch.labels);
  std::vector<double> out;
  double total = 0.0, wsum = 0.0;
  std::vector<double> dz(arch.output_dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    mlp_forward(arch, params, batch.point(i), out);
    total += batch.weights[i] * fn(i, out, dz);
    wsum += batch.weights[i];
  }
  return total / wsum;
}

namespace {

LabeledDataset sample_minibatch(const LabeledDataset& data, int batch, Rng& rng) {
  std::vector<double> cdf(data.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    acc += data.weights[i];
    cdf[i] = acc;
  }
  LabeledDataset mb;
  mb.dim = data.dim;
  mb.num_classes = data.num_classes;
  for (int k = 0; k < batch; ++k) {
    double u = rng.uniform() * acc;
    std::size_t i = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (i >= data.size()) i = data.size() - 1;
    auto p = data.point(i);
    mb.xs.insert(mb.xs.end(), p.begin(), p.end());
    mb.labels.push_back(data.labels[i]);
    mb.weights.push_back(1.0 / static_cast<double>(batch));
  }
  return mb;
}

}  // namespace

std::vector<double> sgd_from(const MlpArch& arch, std::vector<double> params,
                             const LabeledDataset& data, const OptConfig& opt, std::uint64_t seed) {
  if (opt.loss == LossKind::l1 && (arch.mode != OutputMode::l1 || data.num_classes != 2))
    throw ValidationError("l1 training requires an l1-mode arch and binary labels");
  Rng rng(derive_seed(seed, 0xba7c4));
  std::vector<double> velocity(params.size(), 0.0);
  if (opt.project_k > 0.0) project_params_lipschitz(arch, params, opt.project_k);
  for (int step = 0; step < opt.steps; ++step) {
    const LabeledDataset* batch = &data;
    LabeledDataset mb;
    if (opt.batch > 0 && opt.batch < static_cast<int>(data.size())) {
      mb = sample_minibatch(data, opt.batch, rng);
      batch = &mb;
    }
    auto fn = make_loss_fn(opt.loss, batch->labels);
    BackpropResult res;
    try {
      res = mlp_backprop(arch, params, batch->xs, batch->weights, batch->size(), fn);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(res.loss))
      throw NumericError("training diverged at step " + std::to_string(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity[i] = opt.momentum * velocity[i] + res.param_grad[i];
      params[i] -= opt.lr * velocity[i];
    }
    if (opt.project_k > 0.0) project_params_lipschitz(arch, params, opt.project_k);
  }
  return params;
}

MlpHypothesis train_supervised(const MlpArch& arch, const LabeledDataset& data,
                               const OptConfig& opt, std::uint64_t seed) {
  arch.validate();
  if (arch.input_dim() != data.dim) throw ValidationError("arch input dim != data dim");
  if (arch.mode == OutputMode::hard && arch.output_dim() < data.num_classes)
    throw ValidationError("arch output dim smaller than num_classes");
  MlpHypothesis h{arch, init_params(arch, derive_seed(seed, 0x1417))};
  h.params = sgd_from(arch, std::move(h.params), data, opt, seed);
  return h;
}

}  // namespace dab

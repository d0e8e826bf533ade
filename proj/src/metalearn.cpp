#include "dabound/metalearn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dabound/rng.hpp"
#include "dabound/train.hpp"

namespace dab {

void MetaConfig::validate() const {
  if (ways < 2) throw ValidationError("ways must be >= 2");
  if (inner_steps < 0) throw ValidationError("inner_steps must be >= 0");
  if (meta_train_classes.empty() || meta_test_classes.empty())
    throw ValidationError("meta class pools must be nonempty");
  std::set<int> train_set(meta_train_classes.begin(), meta_train_classes.end());
  for (int c : meta_test_classes)
    if (train_set.count(c))
      throw ValidationError("meta-train and meta-test class pools must be disjoint (class " +
                            std::to_string(c) + ")");
  if (static_cast<int>(meta_train_classes.size()) < ways ||
      static_cast<int>(meta_test_classes.size()) < ways)
    throw ValidationError("each class pool must hold at least `ways` classes");
  if (eval_tasks < 2) throw ValidationError("need >= 2 evaluation tasks");
  if (hidden.empty()) throw ValidationError("classifier needs at least one hidden layer");
}

MlpArch MetaConfig::classifier_arch(int dim) const {
  MlpArch arch;
  arch.layers.push_back(dim);
  for (int h : hidden) arch.layers.push_back(h);
  arch.layers.push_back(ways);
  arch.mode = OutputMode::hard;
  return arch;
}

LabeledDataset subset_classes(const LabeledDataset& ds, std::span<const int> sorted_classes) {
  LabeledDataset out;
  out.dim = ds.dim;
  out.num_classes = static_cast<int>(sorted_classes.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = std::lower_bound(sorted_classes.begin(), sorted_classes.end(), ds.labels[i]);
    if (it == sorted_classes.end() || *it != ds.labels[i]) continue;
    auto p = ds.point(i);
    out.xs.insert(out.xs.end(), p.begin(), p.end());
    out.labels.push_back(static_cast<int>(it - sorted_classes.begin()));
    out.weights.push_back(ds.weights[i]);
    mass += ds.weights[i];
  }
  if (out.labels.empty()) throw ValidationError("class subset selects no points");
  for (double& w : out.weights) w /= mass;
  return out;
}

MetaTask sample_task(const TransferInstance& family, std::span<const int> pool, int ways,
                     std::uint64_t seed) {
  if (static_cast<int>(pool.size()) < ways)
    throw ValidationError("class pool smaller than the requested ways");
  std::vector<int> ids(pool.begin(), pool.end());
  Rng rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.below(i + 1)]);
  ids.resize(ways);
  std::sort(ids.begin(), ids.end());
  MetaTask task;
  task.class_subset = ids;
  task.train = subset_classes(family.source, ids);
  task.test = subset_classes(family.target_eval(), ids);
  return task;
}

std::vector<double> inner_loop(const MlpArch& arch, std::vector<double> phi, const MetaTask& task,
                               int t, double step_size) {
  if (t < 0) throw ValidationError("inner_steps must be >= 0");
  OptConfig opt;
  opt.steps = t;
  opt.lr = step_size;
  opt.loss = LossKind::cross_entropy;
  return sgd_from(arch, std::move(phi), task.train, opt, 0);
}

std::vector<double> meta_gradient(const MlpArch& arch, const std::vector<double>& phi,
                                  const MetaTask& task, int t, double inner_lr) {
  auto adapted = inner_loop(arch, phi, task, t, inner_lr);
  return mlp_grad(arch, adapted, task.test, LossKind::cross_entropy);
}

std::vector<double> meta_train(const TransferInstance& family, const MetaConfig& cfg) {
  cfg.validate();
  const MlpArch arch = cfg.classifier_arch(family.dim());
  std::vector<double> phi = init_params(arch, derive_seed(cfg.seed, 0xF1));
  for (int it = 0; it < cfg.meta_iterations; ++it) {
    MetaTask task = sample_task(family, cfg.meta_train_classes, cfg.ways, derive_seed(cfg.seed, 0x7000 + it));
    std::vector<double> g;
    try {
      g = meta_gradient(arch, phi, task, cfg.inner_steps, cfg.inner_lr);
    } catch (const NumericError& e) {
      throw NumericError("meta-training diverged at iteration " + std::to_string(it) + ": " + e.what());
    }
    if (cfg.meta_grad_clip > 0.0) {
      double norm = 0.0;
      for (double v : g) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > cfg.meta_grad_clip)
        for (double& v : g) v *= cfg.meta_grad_clip / norm;
    }
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] -= cfg.outer_lr * g[i];
    for (double v : phi)
      if (!std::isfinite(v))
        throw NumericError("meta-training diverged at iteration " + std::to_string(it));
  }
  return phi;
}

const BaselineRow& BaselineTable::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw ValidationError("no baseline row named '" + name + "'");
}

namespace {

double task_accuracy(const MlpArch& arch, const std::vector<double>& params, const MetaTask& task) {
  Hypothesis h = MlpHypothesis{arch, params};
  return 1.0 - risk01(h, task.test);
}

BaselineRow summarize(std::string name, std::vector<double> accs) {
  BaselineRow row;
  row.name = std::move(name);
  row.per_task = std::move(accs);
  double sum = 0.0;
  for (double a : row.per_task) sum += a;
  row.mean = sum / static_cast<double>(row.per_task.size());
  double ss = 0.0;
  for (double a : row.per_task) ss += (a - row.mean) * (a - row.mean);
  row.sd = row.per_task.size() > 1 ? std::sqrt(ss / static_cast<double>(row.per_task.size() - 1)) : 0.0;
  return row;
}

// 0-based index of the first parameter of the last layer.
int head_offset(const MlpArch& arch) { return arch.layer_offset(arch.num_layers() - 1); }

}  // namespace

BaselineTable run_baselines(const TransferInstance& family, const MetaConfig& cfg) {
  cfg.validate();
  const MlpArch arch = cfg.classifier_arch(family.dim());

  // Held-out evaluation tasks, shared by every baseline.
  std::vector<MetaTask> tasks;
  for (int i = 0; i < cfg.eval_tasks; ++i)
    tasks.push_back(sample_task(family, cfg.meta_test_classes, cfg.ways, derive_seed(cfg.seed, 0xE000 + i)));
  for (const auto& task : tasks)
    for (int c : task.class_subset)
      for (int tc : cfg.meta_train_classes)
        if (c == tc) throw ValidationError("evaluation task uses a meta-train class");

  // Pre-training on the meta-train classes of both domains (both labeled).
  std::vector<int> pool = cfg.meta_train_classes;
  std::sort(pool.begin(), pool.end());
  LabeledDataset pre_src = subset_classes(family.source, pool);
  LabeledDataset pre_tgt = subset_classes(family.target_eval(), pool);
  LabeledDataset pretrain_data;
  pretrain_data.dim = pre_src.dim;
  pretrain_data.num_classes = pre_src.num_classes;
  auto append_half = [&](const LabeledDataset& d) {
    pretrain_data.xs.insert(pretrain_data.xs.end(), d.xs.begin(), d.xs.end());
    pretrain_data.labels.insert(pretrain_data.labels.end(), d.labels.begin(), d.labels.end());
    for (double w : d.weights) pretrain_data.weights.push_back(0.5 * w);
  };
  append_half(pre_src);
  append_half(pre_tgt);
  MlpArch pre_arch = arch;
  pre_arch.layers.back() = static_cast<int>(pool.size());
  OptConfig pre_opt;
  pre_opt.steps = cfg.pretrain_steps;
  pre_opt.lr = cfg.pretrain_lr;
  MlpHypothesis pretrained = train_supervised(pre_arch, pretrain_data, pre_opt, derive_seed(cfg.seed, 0xB1));

  auto pretrained_init = [&](std::uint64_t task_seed) {
    // body copied from the pretrained net, fresh task head
    std::vector<double> p = init_params(arch, task_seed);
    std::copy(pretrained.params.begin(), pretrained.params.begin() + head_offset(pre_arch), p.begin());
    return p;
  };

  std::vector<double> phi = meta_train(family, cfg);

  std::vector<double> acc_random, acc_pre, acc_dann, acc_pre_dann, acc_maml;
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const MetaTask& task = tasks[ti];
    const std::uint64_t tseed = derive_seed(cfg.seed, 0xA000 + ti);

    auto random_init = init_params(arch, tseed);
    acc_random.push_back(task_accuracy(arch, inner_loop(arch, random_init, task, cfg.inner_steps, cfg.inner_lr), task));
    acc_pre.push_back(task_accuracy(arch, inner_loop(arch, pretrained_init(tseed), task, cfg.inner_steps, cfg.inner_lr), task));
    acc_maml.push_back(task_accuracy(arch, inner_loop(arch, phi, task, cfg.inner_steps, cfg.inner_lr), task));

    // DANN on the task: source labeled, target unlabeled.
    TransferInstance task_inst(task.train, task.test, family.shift_kind, tseed);
    AlignConfig dcfg = cfg.dann;
    dcfg.method = AlignMethod::dann;
    dcfg.psi_hidden.assign(cfg.hidden.begin(), cfg.hidden.end() - 1);
    dcfg.latent_dim = cfg.hidden.back();
    dcfg.head_hidden.clear();
    dcfg.seed = tseed;
    auto [dmodel, dtrace] = train_aligned(task_inst, dcfg);
    acc_dann.push_back(evaluate(dmodel, task_inst).target_acc);

    AlignConfig pdcfg = dcfg;
    pdcfg.psi_init.assign(pretrained.params.begin(), pretrained.params.begin() + head_offset(pre_arch));
    auto [pdmodel, pdtrace] = train_aligned(task_inst, pdcfg);
    acc_pre_dann.push_back(evaluate(pdmodel, task_inst).target_acc);
  }

  BaselineTable table;
  table.rows.push_back(summarize("random_so", std::move(acc_random)));
  table.rows.push_back(summarize("pretrain_so", std::move(acc_pre)));
  table.rows.push_back(summarize("dann", std::move(acc_dann)));
  table.rows.push_back(summarize("pretrain_dann", std::move(acc_pre_dann)));
  table.rows.push_back(summarize("maml2dom", std::move(acc_maml)));
  return table;
}

}  // namespace dab

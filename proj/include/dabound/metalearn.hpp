#pragma once

#include <string>
#include <vector>

#include "dabound/alignlab.hpp"
#include "dabound/dataset.hpp"
#include "dabound/mlp.hpp"

namespace dab {

// Class-disjoint W-way transfer task: train on the source domain's points of
// the chosen classes, test on the target domain's, both relabeled 0..W-1 by
// sorted class id. Test labels are evaluation-only.
struct MetaTask {
  std::vector<int> class_subset;
  LabeledDataset train;
  LabeledDataset test;
};

struct MetaConfig {
  int ways = 3;
  int inner_steps = 2;
  double inner_lr = 1.0;
  double outer_lr = 0.1;
  int meta_iterations = 5000;
  std::vector<int> meta_train_classes;
  std::vector<int> meta_test_classes;
  std::vector<int> hidden = {32};  // classifier = [dim, hidden..., ways]
  int eval_tasks = 10;
  double meta_grad_clip = 5.0;  // 0 disables
  int pretrain_steps = 1000;
  double pretrain_lr = 0.3;
  AlignConfig dann;  // per-task DANN baseline; arch fields are overridden
  std::uint64_t seed = 0;

  void validate() const;
  MlpArch classifier_arch(int dim) const;
};

// Restriction of a dataset to a sorted class subset, relabeled 0..W-1,
// weights renormalized.
LabeledDataset subset_classes(const LabeledDataset& ds, std::span<const int> sorted_classes);

// Uniform W-subset of the pool without replacement, deterministic per seed.
MetaTask sample_task(const TransferInstance& family, std::span<const int> pool, int ways,
                     std::uint64_t seed);

// t full-batch cross-entropy SGD steps from phi on the task's train set.
std::vector<double> inner_loop(const MlpArch& arch, std::vector<double> phi, const MetaTask& task,
                               int t, double step_size);

// First-order meta-gradient: the test-loss gradient evaluated at the adapted
// parameters, applied to phi as-is.
std::vector<double> meta_gradient(const MlpArch& arch, const std::vector<double>& phi,
                                  const MetaTask& task, int t, double inner_lr);

// Meta-learned initialization over tasks drawn from the meta-train classes.
std::vector<double> meta_train(const TransferInstance& family, const MetaConfig& cfg);

struct BaselineRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> per_task;
};

struct BaselineTable {
  std::vector<BaselineRow> rows;  // random_so, pretrain_so, dann, pretrain_dann, maml2dom
  const BaselineRow& row(const std::string& name) const;
};

// Every baseline evaluated on the same held-out task set with the same seeds.
BaselineTable run_baselines(const TransferInstance& family, const MetaConfig& cfg);

}  // namespace dab

#pragma once

#include <optional>
#include <string>

#include "dabound/divergence.hpp"

namespace dab {

enum class BoundKind { ben_david, zhang, mansour, wasserstein };
enum class Soundness { certified, heuristic };

std::string bound_kind_name(BoundKind k);
std::string soundness_name(Soundness s);

// Every term of one assembled bound, next to the true target risk it is
// supposed to dominate. For the Mansour regret form, target_risk holds the
// regret LHS and regret_form is set.
struct BoundReport {
  BoundKind kind = BoundKind::ben_david;
  std::string hypothesis_id;
  double source_risk = 0.0;
  double lambda = 0.0;
  DivStatus lambda_status = DivStatus::optimal;
  DivergenceEstimate divergence;
  std::optional<double> lipschitz_k;
  double rhs = 0.0;
  double target_risk = 0.0;
  double slack = 0.0;
  Soundness soundness = Soundness::certified;
  bool regret_form = false;

  // Re-applies the bound formula to the stored terms.
  double recompute_rhs() const;
  std::string json() const;
};

BoundReport assemble_ben_david(const FiniteClass& cls, int h_index, const TransferInstance& inst);
BoundReport assemble_zhang(const FiniteClass& cls, int h_index, const TransferInstance& inst);
BoundReport assemble_mansour(const FiniteClass& cls, int h_index, const TransferInstance& inst);

// L1/Wasserstein bound for a scoring hypothesis whose Lipschitz certificate
// fits within k_class; lambda_upper must come from a witness also inside the
// k_class budget for the certified claim to hold.
BoundReport assemble_wasserstein(const Hypothesis& h, const TransferInstance& inst,
                                 const LambdaEstimate& lambda_upper, double k_class,
                                 const std::string& hypothesis_id = "h");

struct SweepConfig {
  std::vector<double> k_grid;
  MlpArch arch;              // l1-mode
  OptConfig train_opt;       // source-only training (loss forced to l1)
  OptConfig witness_opt;     // joint witness training
  int restarts = 3;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct TradeoffRow {
  double k = 0.0;
  double source_l1 = 0.0;
  double lambda_upper = 0.0;
  double w1 = 0.0;
  double rhs = 0.0;
  double target_l1 = 0.0;
  bool ok = true;
  std::string note;
};

struct TradeoffCurve {
  std::string instance_id;
  std::vector<TradeoffRow> rows;
  double w1 = 0.0;
  std::uint64_t seed = 0;
};

// For each K: a K-projected source-trained scorer, a K-projected joint
// witness for the lambda term, and the assembled RHS. Rows are seeded
// seed + index and independent.
TradeoffCurve tradeoff_sweep(const TransferInstance& inst, const SweepConfig& cfg);

}  // namespace dab

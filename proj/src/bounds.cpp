#include "dabound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "dabound/lipschitz.hpp"
#include "dabound/rng.hpp"

namespace dab {

std::string bound_kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::ben_david: return "ben_david";
    case BoundKind::zhang: return "zhang";
    case BoundKind::mansour: return "mansour";
    case BoundKind::wasserstein: return "wasserstein";
  }
  return "ben_david";
}

std::string soundness_name(Soundness s) {
  return s == Soundness::certified ? "certified" : "heuristic";
}

double BoundReport::recompute_rhs() const {
  if (kind == BoundKind::wasserstein)
    return source_risk + lambda + 2.0 * lipschitz_k.value_or(0.0) * divergence.value;
  return source_risk + lambda + divergence.value;
}

std::string BoundReport::json() const {
  nlohmann::json j;
  j["bound_kind"] = bound_kind_name(kind);
  j["hypothesis_id"] = hypothesis_id;
  j["source_risk"] = source_risk;
  j["lambda"] = lambda;
  j["lambda_status"] = div_status_name(lambda_status);
  j["divergence"] = nlohmann::json::parse(divergence.json());
  if (lipschitz_k) j["lipschitz_k"] = *lipschitz_k;
  j["rhs"] = rhs;
  j["target_risk"] = target_risk;
  j["slack"] = slack;
  j["soundness"] = soundness_name(soundness);
  j["regret_form"] = regret_form;
  return j.dump();
}

namespace {

void check_member(const FiniteClass& cls, int h_index) {
  if (h_index < 0 || h_index >= static_cast<int>(cls.size()))
    throw ValidationError("hypothesis index " + std::to_string(h_index) +
                          " outside class '" + cls.name + "'");
}

int argmin_risk(const FiniteClass& cls, const LabeledDataset& data) {
  int best = 0;
  double best_v = risk01(cls.members[0], data);
  for (std::size_t i = 1; i < cls.size(); ++i) {
    double v = risk01(cls.members[i], data);
    if (v < best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

BoundReport assemble_ben_david(const FiniteClass& cls, int h_index, const TransferInstance& inst) {
  check_member(cls, h_index);
  const Hypothesis& h = cls.members[h_index];
  BoundReport r;
  r.kind = BoundKind::ben_david;
  r.hypothesis_id = "member_" + std::to_string(h_index);
  r.source_risk = risk01(h, inst.source);
  auto lam = lambda_estimate_exact(cls, inst.source, inst.target_eval());
  r.lambda = lam.value;
  r.lambda_status = lam.status;
  r.divergence = hdh_divergence_exact(cls, unlabeled(inst.source), inst.target_unlabeled());
  r.rhs = r.source_risk + r.lambda + r.divergence.value;
  r.target_risk = risk01(h, inst.target_eval());
  r.slack = r.rhs - r.target_risk;
  r.soundness = Soundness::certified;
  return r;
}

BoundReport assemble_zhang(const FiniteClass& cls, int h_index, const TransferInstance& inst) {
  check_member(cls, h_index);
  const Hypothesis& h = cls.members[h_index];
  BoundReport r;
  r.kind = BoundKind::zhang;
  r.hypothesis_id = "member_" + std::to_string(h_index);
  r.source_risk = risk01(h, inst.source);
  auto lam = lambda_estimate_exact(cls, inst.source, inst.target_eval());
  r.lambda = lam.value;
  r.lambda_status = lam.status;
  r.divergence = single_hyp_discrepancy_exact(h, cls, unlabeled(inst.source), inst.target_unlabeled());
  r.rhs = r.source_risk + r.lambda + r.divergence.value;
  r.target_risk = risk01(h, inst.target_eval());
  r.slack = r.rhs - r.target_risk;
  r.soundness = Soundness::certified;
  return r;
}

BoundReport assemble_mansour(const FiniteClass& cls, int h_index, const TransferInstance& inst) {
  check_member(cls, h_index);
  const Hypothesis& h = cls.members[h_index];
  const int si = argmin_risk(cls, inst.source);
  const int ti = argmin_risk(cls, inst.target_eval());
  const Hypothesis& h_star_s = cls.members[si];
  const Hypothesis& h_star_t = cls.members[ti];

  BoundReport r;
  r.kind = BoundKind::mansour;
  r.regret_form = true;
  r.hypothesis_id = "member_" + std::to_string(h_index);
  r.source_risk = disagreement(h, h_star_s, inst.source);
  r.lambda = disagreement(h_star_t, h_star_s, inst.source);  // second source term; no joint-error term in this bound
  r.lambda_status = DivStatus::optimal;
  r.divergence = mansour_discrepancy(cls, unlabeled(inst.source), inst.target_unlabeled());
  r.rhs = r.source_risk + r.lambda + r.divergence.value;
  r.target_risk = risk01(h, inst.target_eval()) - risk01(h_star_t, inst.target_eval());
  r.slack = r.rhs - r.target_risk;
  r.soundness = Soundness::certified;
  return r;
}

BoundReport assemble_wasserstein(const Hypothesis& h, const TransferInstance& inst,
                                 const LambdaEstimate& lambda_upper, double k_class,
                                 const std::string& hypothesis_id) {
  if (inst.num_classes() != 2) throw ValidationError("wasserstein bound requires a binary instance");
  if (!has_score(h)) throw ValidationError("wasserstein bound requires an l1-mode hypothesis");
  auto cert = lipschitz_bound(h);
  if (cert.k > k_class + 1e-9)
    throw ValidationError("hypothesis certificate exceeds the class Lipschitz budget");
  if (lambda_upper.witness) {
    auto wcert = lipschitz_bound(*lambda_upper.witness);
    if (wcert.k > k_class + 1e-9)
      throw ValidationError("lambda witness certificate exceeds the class Lipschitz budget");
  }
  BoundReport r;
  r.kind = BoundKind::wasserstein;
  r.hypothesis_id = hypothesis_id;
  r.source_risk = risk_l1(h, inst.source);
  r.lambda = lambda_upper.value;
  r.lambda_status = lambda_upper.status;
  r.divergence = wasserstein1_exact(unlabeled(inst.source), inst.target_unlabeled());
  r.lipschitz_k = k_class;
  r.rhs = r.source_risk + r.lambda + 2.0 * k_class * r.divergence.value;
  r.target_risk = risk_l1(h, inst.target_eval());
  r.slack = r.rhs - r.target_risk;
  r.soundness = lambda_upper.status == DivStatus::lower_bound ? Soundness::heuristic
                                                              : Soundness::certified;
  return r;
}

TradeoffCurve tradeoff_sweep(const TransferInstance& inst, const SweepConfig& cfg) {
  if (inst.num_classes() != 2) throw ValidationError("tradeoff sweep requires a binary instance");
  if (cfg.k_grid.empty()) throw ValidationError("k_grid is empty");
  for (std::size_t i = 0; i + 1 < cfg.k_grid.size(); ++i)
    if (!(cfg.k_grid[i] < cfg.k_grid[i + 1]))
      throw ValidationError("k_grid must be strictly increasing");
  if (cfg.arch.mode != OutputMode::l1) throw ValidationError("sweep arch must be l1-mode");

  TradeoffCurve curve;
  curve.seed = cfg.seed;
  curve.w1 = wasserstein1_exact(unlabeled(inst.source), inst.target_unlabeled()).value;
  curve.rows.resize(cfg.k_grid.size());

  auto run_row = [&](std::size_t idx) {
    const double k = cfg.k_grid[idx];
    TradeoffRow row;
    row.k = k;
    row.w1 = curve.w1;
    try {
      OptConfig topt = cfg.train_opt;
      topt.loss = LossKind::l1;
      topt.project_k = k;
      MlpHypothesis h = train_supervised(cfg.arch, inst.source, topt, derive_seed(cfg.seed, idx));

      OptConfig wopt = cfg.witness_opt;
      wopt.loss = LossKind::l1;
      wopt.project_k = k;
      auto lam = lambda_estimate_trained(cfg.arch, inst.source, inst.target_eval(), wopt,
                                         cfg.restarts, derive_seed(cfg.seed, 1000 + idx));

      Hypothesis hv = h;
      row.source_l1 = risk_l1(hv, inst.source);
      row.lambda_upper = lam.value;
      row.rhs = row.source_l1 + row.lambda_upper + 2.0 * k * curve.w1;
      row.target_l1 = risk_l1(hv, inst.target_eval());
    } catch (const NumericError& e) {
      row.ok = false;
      row.note = e.what();
    }
    curve.rows[idx] = std::move(row);
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cfg.k_grid.size(); ++i) run_row(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          std::size_t idx;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= cfg.k_grid.size()) return;
            idx = next++;
          }
          run_row(idx);
        }
      });
    for (auto& th : pool) th.join();
  }
  return curve;
}

}  // namespace dab

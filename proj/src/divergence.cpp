#include "dabound/divergence.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dabound/rng.hpp"

namespace dab {

std::string div_method_name(DivMethod m) {
  switch (m) {
    case DivMethod::exact_enum: return "exact_enum";
    case DivMethod::adversarial: return "adversarial";
    case DivMethod::exact_ot: return "exact_ot";
    case DivMethod::sinkhorn: return "sinkhorn";
  }
  return "exact_enum";
}

std::string div_status_name(DivStatus s) {
  switch (s) {
    case DivStatus::optimal: return "optimal";
    case DivStatus::lower_bound: return "lower_bound";
    case DivStatus::upper_bound: return "upper_bound";
  }
  return "optimal";
}

std::string DivergenceEstimate::json() const {
  nlohmann::json j;
  j["value"] = value;
  j["method"] = div_method_name(method);
  j["status"] = div_status_name(status);
  j["iterations"] = iterations;
  j["final_objective"] = final_objective;
  return j.dump();
}

namespace {

// Weighted disagreement between two prediction tables.
double table_disagreement(const std::vector<int>& a, const std::vector<int>& b,
                          const std::vector<double>& w) {
  double r = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (a[i] != b[i]) r += w[i];
  return r;
}

std::vector<std::vector<int>> tabulate(const FiniteClass& cls, const UnlabeledView& v) {
  std::vector<std::vector<int>> t;
  t.reserve(cls.size());
  for (const auto& h : cls.members) t.push_back(predict_all(h, v));
  return t;
}

}  // namespace

DivergenceEstimate hdh_divergence_exact(const FiniteClass& cls, const UnlabeledView& sx,
                                        const UnlabeledView& tx) {
  cls.validate();
  if (sx.dim != tx.dim) throw ValidationError("views have different dimensions");
  auto ts = tabulate(cls, sx), tt = tabulate(cls, tx);
  double best = 0.0;  // the diagonal pair attains 0
  for (std::size_t a = 0; a < cls.size(); ++a)
    for (std::size_t b = 0; b < cls.size(); ++b) {
      double v = table_disagreement(tt[a], tt[b], tx.weights) -
                 table_disagreement(ts[a], ts[b], sx.weights);
      if (v > best) best = v;
    }
  DivergenceEstimate e;
  e.value = best;
  e.method = DivMethod::exact_enum;
  e.status = DivStatus::optimal;
  e.final_objective = best;
  return e;
}

DivergenceEstimate single_hyp_discrepancy_exact(const Hypothesis& h, const FiniteClass& cls,
                                                const UnlabeledView& sx, const UnlabeledView& tx) {
  cls.validate();
  auto hs = predict_all(h, sx), ht = predict_all(h, tx);
  auto ts = tabulate(cls, sx), tt = tabulate(cls, tx);
  double best = 0.0;
  for (std::size_t b = 0; b < cls.size(); ++b) {
    double v = table_disagreement(ht, tt[b], tx.weights) -
               table_disagreement(hs, ts[b], sx.weights);
    if (v > best) best = v;
  }
  DivergenceEstimate e;
  e.value = best;
  e.method = DivMethod::exact_enum;
  e.status = DivStatus::optimal;
  e.final_objective = best;
  return e;
}

DivergenceEstimate mansour_discrepancy(const FiniteClass& cls, const UnlabeledView& sx,
                                       const UnlabeledView& tx) {
  cls.validate();
  auto ts = tabulate(cls, sx), tt = tabulate(cls, tx);
  double best = 0.0;
  for (std::size_t a = 0; a < cls.size(); ++a)
    for (std::size_t b = 0; b < cls.size(); ++b) {
      double v = std::abs(table_disagreement(ts[a], ts[b], sx.weights) -
                          table_disagreement(tt[a], tt[b], tx.weights));
      if (v > best) best = v;
    }
  DivergenceEstimate e;
  e.value = best;
  e.method = DivMethod::exact_enum;
  e.status = DivStatus::optimal;
  e.final_objective = best;
  return e;
}

namespace {

struct AdvState {
  const MlpArch& arch;
  const UnlabeledView& sx;
  const UnlabeledView& tx;

  std::vector<double> scores(const std::vector<double>& params, const UnlabeledView& v) const {
    std::vector<double> out, z;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      mlp_forward(arch, params, v.point(i), z);
      out.push_back(std::tanh(z[0]));
    }
    return out;
  }

  // Exact 0-1 objective of a pair of raw-sign discriminators.
  double hard_value(const std::vector<double>& ms, const std::vector<double>& mt,
                    const std::vector<double>& other_s, const std::vector<double>& other_t) const {
    double vt = 0.0, vs = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i)
      if ((mt[i] >= 0.0) != (other_t[i] >= 0.0)) vt += tx.weights[i];
    for (std::size_t i = 0; i < sx.size(); ++i)
      if ((ms[i] >= 0.0) != (other_s[i] >= 0.0)) vs += sx.weights[i];
    return vt - vs;
  }

  // Ascent steps on J = E_T[(1-mm')/2] - E_S[(1-mm')/2] for one net, the
  // other net's margins held fixed.
  void ascend(std::vector<double>& params, const std::vector<double>& fixed_s,
              const std::vector<double>& fixed_t, int steps, double lr) const {
    for (int s = 0; s < steps; ++s) {
      auto fn_t = [&](std::size_t i, std::span<const double> z, std::span<double> dz) {
        const double m = std::tanh(z[0]);
        dz[0] = -0.5 * fixed_t[i] * (1.0 - m * m);
        return 0.5 * (1.0 - m * fixed_t[i]);
      };
      auto fn_s = [&](std::size_t i, std::span<const double> z, std::span<double> dz) {
        const double m = std::tanh(z[0]);
        dz[0] = -0.5 * fixed_s[i] * (1.0 - m * m);
        return 0.5 * (1.0 - m * fixed_s[i]);
      };
      auto gt = mlp_backprop(arch, params, tx.xs, tx.weights, tx.size(), fn_t);
      auto gs = mlp_backprop(arch, params, sx.xs, sx.weights, sx.size(), fn_s);
      for (std::size_t i = 0; i < params.size(); ++i)
        params[i] += lr * (gt.param_grad[i] - gs.param_grad[i]);
    }
  }
};

DivergenceEstimate adversarial_sup(const AdversarialConfig& cfg, const UnlabeledView& sx,
                                   const UnlabeledView& tx, std::uint64_t seed,
                                   const std::vector<double>* fixed_margins_s,
                                   const std::vector<double>* fixed_margins_t) {
  MlpArch arch = cfg.arch;
  if (arch.layers.back() != 1) throw ValidationError("adversarial arch needs a single output");
  AdvState st{arch, sx, tx};

  double best_hard = 0.0;  // diagonal pair attains 0
  double best_smooth = 0.0;
  int total_steps = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto pa = init_params(arch, derive_seed(seed, 2 * r));
    auto pb = init_params(arch, derive_seed(seed, 2 * r + 1));
    for (int blk = 0; blk < cfg.blocks; ++blk) {
      if (fixed_margins_s == nullptr) {
        auto ms = st.scores(pb, sx), mt = st.scores(pb, tx);
        st.ascend(pa, ms, mt, cfg.steps_per_block, cfg.lr);
      }
      auto ms = st.scores(pa, sx), mt = st.scores(pa, tx);
      if (fixed_margins_s != nullptr) {
        ms = *fixed_margins_s;
        mt = *fixed_margins_t;
      }
      st.ascend(pb, ms, mt, cfg.steps_per_block, cfg.lr);
      total_steps += cfg.steps_per_block * (fixed_margins_s ? 1 : 2);

      auto bs = st.scores(pb, sx), bt = st.scores(pb, tx);
      const double hard = st.hard_value(bs, bt, ms, mt);
      if (hard > best_hard) best_hard = hard;
      double smooth = 0.0;
      for (std::size_t i = 0; i < tx.size(); ++i) smooth += tx.weights[i] * 0.5 * (1.0 - bt[i] * mt[i]);
      for (std::size_t i = 0; i < sx.size(); ++i) smooth -= sx.weights[i] * 0.5 * (1.0 - bs[i] * ms[i]);
      if (smooth > best_smooth) best_smooth = smooth;
    }
  }
  DivergenceEstimate e;
  e.value = best_hard;
  e.method = DivMethod::adversarial;
  e.status = DivStatus::lower_bound;
  e.iterations = total_steps;
  e.final_objective = best_smooth;
  return e;
}

}  // namespace

DivergenceEstimate hdh_divergence_adversarial(const AdversarialConfig& cfg, const UnlabeledView& sx,
                                              const UnlabeledView& tx, std::uint64_t seed) {
  return adversarial_sup(cfg, sx, tx, seed, nullptr, nullptr);
}

DivergenceEstimate single_hyp_discrepancy_adversarial(const Hypothesis& h, const AdversarialConfig& cfg,
                                                      const UnlabeledView& sx, const UnlabeledView& tx,
                                                      std::uint64_t seed) {
  // Fixed hypothesis enters through its hard labels mapped to +/-1 margins.
  std::vector<double> ms(sx.size()), mt(tx.size());
  for (std::size_t i = 0; i < sx.size(); ++i) ms[i] = predict_label(h, sx.point(i)) == 1 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < tx.size(); ++i) mt[i] = predict_label(h, tx.point(i)) == 1 ? 1.0 : -1.0;
  return adversarial_sup(cfg, sx, tx, seed, &ms, &mt);
}

DivergenceEstimate wasserstein1_exact(const UnlabeledView& sx, const UnlabeledView& tx) {
  auto r = wasserstein1_exact_cost(sx, tx);
  DivergenceEstimate e;
  e.value = r.cost;
  e.method = DivMethod::exact_ot;
  e.status = DivStatus::optimal;
  e.iterations = r.augmentations;
  e.final_objective = r.cost;
  return e;
}

DivergenceEstimate wasserstein1_sinkhorn(const UnlabeledView& sx, const UnlabeledView& tx,
                                         double reg, int max_iter, double tol) {
  SinkhornOptions opts;
  opts.reg = reg;
  opts.max_iter = max_iter;
  opts.tol = tol;
  auto r = sinkhorn_w1(sx, tx, opts);
  DivergenceEstimate e;
  e.value = r.cost;
  e.method = DivMethod::sinkhorn;
  e.status = DivStatus::upper_bound;
  e.iterations = r.iterations;
  e.final_objective = r.marginal_violation;
  return e;
}

LambdaEstimate lambda_estimate_exact(const FiniteClass& cls, const LabeledDataset& source,
                                     const LabeledDataset& target_eval) {
  cls.validate();
  LambdaEstimate best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cls.size(); ++i) {
    const double v = risk01(cls.members[i], source) + risk01(cls.members[i], target_eval);
    if (v < best.value) {  // ties keep the first index
      best.value = v;
      best.witness_index = static_cast<int>(i);
    }
  }
  best.status = DivStatus::optimal;
  return best;
}

LambdaEstimate lambda_estimate_trained(const MlpArch& arch, const LabeledDataset& source,
                                       const LabeledDataset& target_eval, const OptConfig& opt,
                                       int restarts, std::uint64_t seed) {
  // Joint dataset with halved weights; minimizing its loss minimizes the sum
  // of per-domain expected losses.
  LabeledDataset joint;
  joint.dim = source.dim;
  joint.num_classes = source.num_classes;
  auto append = [&](const LabeledDataset& d) {
    joint.xs.insert(joint.xs.end(), d.xs.begin(), d.xs.end());
    joint.labels.insert(joint.labels.end(), d.labels.begin(), d.labels.end());
    for (double w : d.weights) joint.weights.push_back(0.5 * w);
  };
  append(source);
  append(target_eval);

  LambdaEstimate best;
  best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    MlpHypothesis h = train_supervised(arch, joint, opt, derive_seed(seed, r));
    Hypothesis hv = h;
    const double v = opt.loss == LossKind::l1
                         ? risk_l1(hv, source) + risk_l1(hv, target_eval)
                         : risk01(hv, source) + risk01(hv, target_eval);
    if (v < best.value) {
      best.value = v;
      best.witness = std::move(h);
    }
  }
  best.status = DivStatus::upper_bound;
  return best;
}

}  // namespace dab

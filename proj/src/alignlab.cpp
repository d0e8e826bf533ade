#include "dabound/alignlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dabound/lipschitz.hpp"
#include "dabound/rng.hpp"
#include "dabound/train.hpp"

namespace dab {

std::string align_method_name(AlignMethod m) {
  switch (m) {
    case AlignMethod::source_only: return "source_only";
    case AlignMethod::dann: return "dann";
    case AlignMethod::mdd: return "mdd";
    case AlignMethod::wdgrl: return "wdgrl";
  }
  return "source_only";
}

AlignMethod align_method_from_name(const std::string& s) {
  if (s == "source_only") return AlignMethod::source_only;
  if (s == "dann") return AlignMethod::dann;
  if (s == "mdd") return AlignMethod::mdd;
  if (s == "wdgrl") return AlignMethod::wdgrl;
  throw ValidationError("unknown align method '" + s + "'");
}

void AlignConfig::validate() const {
  if (weight < 0.0) throw ValidationError("align weight must be >= 0");
  if (latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (critic_steps < 1) throw ValidationError("critic_steps must be >= 1");
}

std::vector<double> RepClassifier::encode(VecView x) const {
  std::vector<double> z;
  mlp_forward(psi.arch, psi.params, x, z);
  return z;
}

int RepClassifier::predict(VecView x) const {
  auto z = encode(x);
  std::vector<double> logits;
  mlp_forward(head.arch, head.params, z, logits);
  int best = 0;
  for (int c = 1; c < static_cast<int>(logits.size()); ++c)
    if (logits[c] > logits[best]) best = c;
  return best;
}

namespace {

double sigmoid(double u) { return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }
double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

// Latents of every point of a view under the current encoder parameters.
std::vector<double> encode_all(const MlpArch& arch, const std::vector<double>& params,
                               std::span<const double> xs, std::size_t n, int dim) {
  std::vector<double> out(n * static_cast<std::size_t>(arch.output_dim()));
  std::vector<double> z;
  for (std::size_t i = 0; i < n; ++i) {
    mlp_forward(arch, params, {xs.data() + i * dim, static_cast<std::size_t>(dim)}, z);
    std::copy(z.begin(), z.end(), out.begin() + i * z.size());
  }
  return out;
}

std::vector<double> softmax(std::span<const double> z) {
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    p[c] = std::exp(z[c] - mx);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

struct AlignState {
  const TransferInstance& inst;
  const AlignConfig& cfg;
  UnlabeledView tview;
  MlpArch psi_arch, head_arch, critic_arch;
  std::vector<double> psi, head, critic;
  TrainingTrace trace;

  AlignState(const TransferInstance& i, const AlignConfig& c) : inst(i), cfg(c), tview(i.target_unlabeled()) {
    psi_arch.layers.push_back(inst.dim());
    for (int w : cfg.psi_hidden) psi_arch.layers.push_back(w);
    psi_arch.layers.push_back(cfg.latent_dim);
    psi_arch.mode = OutputMode::hard;  // raw output; latent is the last layer
    head_arch.layers.push_back(cfg.latent_dim);
    for (int w : cfg.head_hidden) head_arch.layers.push_back(w);
    head_arch.layers.push_back(inst.num_classes());
    head_arch.mode = OutputMode::hard;
    critic_arch.layers.push_back(cfg.latent_dim);
    for (int w : cfg.critic_hidden) critic_arch.layers.push_back(w);
    critic_arch.layers.push_back(1);
    critic_arch.mode = OutputMode::hard;

    psi = init_params(psi_arch, derive_seed(cfg.seed, 1));
    if (!cfg.psi_init.empty()) {
      if (cfg.psi_init.size() != psi.size())
        throw ValidationError("psi_init length does not match the encoder architecture");
      psi = cfg.psi_init;
    }
    head = init_params(head_arch, derive_seed(cfg.seed, 2));
    critic = init_params(critic_arch, derive_seed(cfg.seed, 3));
  }
};

}  // namespace

std::pair<RepClassifier, TrainingTrace> train_aligned(const TransferInstance& inst, const AlignConfig& cfg) {
  cfg.validate();
  AlignState st(inst, cfg);
  const LabeledDataset& src = inst.source;
  const std::size_t ns = src.size(), nt = st.tview.size();
  // weight 0 degenerates to plain source supervision, trace included
  const AlignMethod method = cfg.weight == 0.0 ? AlignMethod::source_only : cfg.method;
  st.trace.method = align_method_name(cfg.method);

  auto ce_fn = make_loss_fn(LossKind::cross_entropy, src.labels);

  for (int step = 0; step < cfg.steps; ++step) {
    auto zs = encode_all(st.psi_arch, st.psi, src.xs, ns, inst.dim());
    auto zt = encode_all(st.psi_arch, st.psi, st.tview.xs, nt, inst.dim());
    TraceRow row;
    row.step = step;

    // --- adversary updates (latents held fixed) ---
    if (method == AlignMethod::dann) {
      for (int k = 0; k < cfg.critic_steps; ++k) {
        auto fs = [&](std::size_t, std::span<const double> u, std::span<double> du) {
          du[0] = 0.5 * sigmoid(u[0]);
          return 0.5 * softplus(u[0]);
        };
        auto ft = [&](std::size_t, std::span<const double> u, std::span<double> du) {
          du[0] = 0.5 * (sigmoid(u[0]) - 1.0);
          return 0.5 * (softplus(u[0]) - u[0]);
        };
        auto gs = mlp_backprop(st.critic_arch, st.critic, zs, src.weights, ns, fs);
        auto gt = mlp_backprop(st.critic_arch, st.critic, zt, st.tview.weights, nt, ft);
        double gnorm = 0.0;
        for (std::size_t i = 0; i < st.critic.size(); ++i) {
          const double g = gs.param_grad[i] + gt.param_grad[i];
          gnorm += g * g;
          st.critic[i] = st.critic[i] * (1.0 - cfg.lr_critic * cfg.critic_decay) - cfg.lr_critic * g;
        }
        row.critic_loss = gs.loss + gt.loss;
        if (std::sqrt(gnorm) < 1e-10) st.trace.critic_collapse = true;
      }
    } else if (method == AlignMethod::wdgrl) {
      for (int k = 0; k < cfg.critic_steps; ++k) {
        auto plus = [&](std::size_t, std::span<const double> u, std::span<double> du) {
          du[0] = 1.0;
          return u[0];
        };
        auto gs = mlp_backprop(st.critic_arch, st.critic, zs, src.weights, ns, plus);
        auto gt = mlp_backprop(st.critic_arch, st.critic, zt, st.tview.weights, nt, plus);
        double gnorm = 0.0;
        for (std::size_t i = 0; i < st.critic.size(); ++i) {
          const double g = gs.param_grad[i] - gt.param_grad[i];  // ascend E_S[u] - E_T[u]
          gnorm += g * g;
          st.critic[i] += cfg.lr_critic * g;
        }
        project_params_lipschitz(st.critic_arch, st.critic, 1.0);
        row.critic_loss = -(gs.loss - gt.loss);  // negative dual estimate
        if (std::sqrt(gnorm) < 1e-10) st.trace.critic_collapse = true;
      }
    } else if (method == AlignMethod::mdd) {
      // adversary classifier stored in `critic` slot with head-shaped arch
      if (st.critic_arch.layers != st.head_arch.layers) {
        st.critic_arch = st.head_arch;
        st.critic = init_params(st.critic_arch, derive_seed(cfg.seed, 3));
      }
      for (int k = 0; k < cfg.critic_steps; ++k) {
        std::vector<std::vector<double>> ps_main(ns), pt_main(nt);
        std::vector<double> logits;
        for (std::size_t i = 0; i < ns; ++i) {
          mlp_forward(st.head_arch, st.head, {zs.data() + i * cfg.latent_dim, (std::size_t)cfg.latent_dim}, logits);
          ps_main[i] = softmax(logits);
        }
        for (std::size_t i = 0; i < nt; ++i) {
          mlp_forward(st.head_arch, st.head, {zt.data() + i * cfg.latent_dim, (std::size_t)cfg.latent_dim}, logits);
          pt_main[i] = softmax(logits);
        }
        // smoothed disagreement 1 - <p, p'>; adversary ascends its target-source gap
        auto adv_fn = [&](const std::vector<std::vector<double>>& pmain, double sign) {
          return [&, sign](std::size_t i, std::span<const double> z, std::span<double> dz) {
            auto p = softmax(z);
            double s = 0.0;
            for (std::size_t c = 0; c < p.size(); ++c) s += p[c] * pmain[i][c];
            for (std::size_t c = 0; c < p.size(); ++c) dz[c] = sign * -p[c] * (pmain[i][c] - s);
            return sign * (1.0 - s);
          };
        };
        auto gt2 = mlp_backprop(st.critic_arch, st.critic, zt, st.tview.weights, nt, adv_fn(pt_main, 1.0));
        auto gs2 = mlp_backprop(st.critic_arch, st.critic, zs, src.weights, ns, adv_fn(ps_main, -1.0));
        double gnorm = 0.0;
        for (std::size_t i = 0; i < st.critic.size(); ++i) {
          const double g = gt2.param_grad[i] + gs2.param_grad[i];
          gnorm += g * g;
          // ascend with shrinkage
          st.critic[i] = st.critic[i] * (1.0 - cfg.lr_critic * cfg.critic_decay) + cfg.lr_critic * g;
        }
        row.critic_loss = gt2.loss + gs2.loss;  // current smoothed disparity
        if (std::sqrt(gnorm) < 1e-10) st.trace.critic_collapse = true;
      }
    }

    // --- model update ---
    auto head_res = mlp_backprop(st.head_arch, st.head, zs, src.weights, ns, ce_fn, true);
    row.source_ce = head_res.loss;
    if (!std::isfinite(row.source_ce))
      throw NumericError("alignment training diverged at step " + std::to_string(step));

    std::vector<double> dz_s = head_res.input_grad;  // ns * latent, weight-scaled
    std::vector<double> dz_t(nt * static_cast<std::size_t>(cfg.latent_dim), 0.0);

    if (method == AlignMethod::dann) {
      auto fs = [&](std::size_t, std::span<const double> u, std::span<double> du) {
        du[0] = 0.5 * sigmoid(u[0]);
        return 0.5 * softplus(u[0]);
      };
      auto ft = [&](std::size_t, std::span<const double> u, std::span<double> du) {
        du[0] = 0.5 * (sigmoid(u[0]) - 1.0);
        return 0.5 * (softplus(u[0]) - u[0]);
      };
      auto cs = mlp_backprop(st.critic_arch, st.critic, zs, src.weights, ns, fs, true);
      auto ct = mlp_backprop(st.critic_arch, st.critic, zt, st.tview.weights, nt, ft, true);
      row.align_term = cs.loss + ct.loss;  // critic domain loss the encoder ascends
      for (std::size_t i = 0; i < dz_s.size(); ++i) dz_s[i] -= cfg.weight * cs.input_grad[i];
      for (std::size_t i = 0; i < dz_t.size(); ++i) dz_t[i] -= cfg.weight * ct.input_grad[i];
    } else if (method == AlignMethod::wdgrl) {
      auto plus = [&](std::size_t, std::span<const double> u, std::span<double> du) {
        du[0] = 1.0;
        return u[0];
      };
      auto cs = mlp_backprop(st.critic_arch, st.critic, zs, src.weights, ns, plus, true);
      auto ct = mlp_backprop(st.critic_arch, st.critic, zt, st.tview.weights, nt, plus, true);
      row.align_term = cs.loss - ct.loss;  // latent W1 dual estimate, minimized
      for (std::size_t i = 0; i < dz_s.size(); ++i) dz_s[i] += cfg.weight * cs.input_grad[i];
      for (std::size_t i = 0; i < dz_t.size(); ++i) dz_t[i] -= cfg.weight * ct.input_grad[i];
    } else if (method == AlignMethod::mdd) {
      std::vector<std::vector<double>> ps_adv(ns), pt_adv(nt);
      std::vector<double> logits;
      for (std::size_t i = 0; i < ns; ++i) {
        mlp_forward(st.critic_arch, st.critic, {zs.data() + i * cfg.latent_dim, (std::size_t)cfg.latent_dim}, logits);
        ps_adv[i] = softmax(logits);
      }
      for (std::size_t i = 0; i < nt; ++i) {
        mlp_forward(st.critic_arch, st.critic, {zt.data() + i * cfg.latent_dim, (std::size_t)cfg.latent_dim}, logits);
        pt_adv[i] = softmax(logits);
      }
      auto gap_fn = [&](const std::vector<std::vector<double>>& padv, double sign) {
        return [&, sign](std::size_t i, std::span<const double> z, std::span<double> dz) {
          auto p = softmax(z);
          double s = 0.0;
          for (std::size_t c = 0; c < p.size(); ++c) s += p[c] * padv[i][c];
          for (std::size_t c = 0; c < p.size(); ++c) dz[c] = sign * -p[c] * (padv[i][c] - s);
          return sign * (1.0 - s);
        };
      };
      // encoder minimizes CE + weight * (sdis_T - sdis_S): gradient through
      // the main head's probabilities, adversary fixed
      auto ms = mlp_backprop(st.head_arch, st.head, zs, src.weights, ns, gap_fn(ps_adv, -1.0), true);
      auto mt = mlp_backprop(st.head_arch, st.head, zt, st.tview.weights, nt, gap_fn(pt_adv, 1.0), true);
      row.align_term = mt.loss + ms.loss;
      for (std::size_t i = 0; i < dz_s.size(); ++i) dz_s[i] += cfg.weight * ms.input_grad[i];
      for (std::size_t i = 0; i < dz_t.size(); ++i) dz_t[i] += cfg.weight * mt.input_grad[i];
      // exact 0-1 disparity of the (head, adversary) pair for diagnosis
      auto amax = [](const std::vector<double>& p) {
        return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      };
      std::vector<double> logits2;
      double hard_t = 0.0, hard_s = 0.0;
      for (std::size_t i = 0; i < nt; ++i) {
        mlp_forward(st.head_arch, st.head, {zt.data() + i * cfg.latent_dim, (std::size_t)cfg.latent_dim}, logits2);
        if (amax(softmax(logits2)) != amax(pt_adv[i])) hard_t += st.tview.weights[i];
      }
      for (std::size_t i = 0; i < ns; ++i) {
        mlp_forward(st.head_arch, st.head, {zs.data() + i * cfg.latent_dim, (std::size_t)cfg.latent_dim}, logits2);
        if (amax(softmax(logits2)) != amax(ps_adv[i])) hard_s += src.weights[i];
      }
      row.hard_disparity = hard_t - hard_s;
    }

    // chain into the encoder
    auto psi_src = mlp_backprop(st.psi_arch, st.psi, src.xs, {}, ns,
                                [&](std::size_t i, std::span<const double>, std::span<double> dz) {
                                  for (int c = 0; c < cfg.latent_dim; ++c) dz[c] = dz_s[i * cfg.latent_dim + c];
                                  return 0.0;
                                });
    std::vector<double> psi_grad = std::move(psi_src.param_grad);
    bool target_touch = method == AlignMethod::dann || method == AlignMethod::wdgrl || method == AlignMethod::mdd;
    if (target_touch) {
      auto psi_tgt = mlp_backprop(st.psi_arch, st.psi, st.tview.xs, {}, nt,
                                  [&](std::size_t i, std::span<const double>, std::span<double> dz) {
                                    for (int c = 0; c < cfg.latent_dim; ++c) dz[c] = dz_t[i * cfg.latent_dim + c];
                                    return 0.0;
                                  });
      for (std::size_t i = 0; i < psi_grad.size(); ++i) psi_grad[i] += psi_tgt.param_grad[i];
    }

    if (cfg.model_grad_clip > 0.0) {
      double norm = 0.0;
      for (double g : head_res.param_grad) norm += g * g;
      for (double g : psi_grad) norm += g * g;
      norm = std::sqrt(norm);
      if (norm > cfg.model_grad_clip) {
        const double scale = cfg.model_grad_clip / norm;
        for (double& g : head_res.param_grad) g *= scale;
        for (double& g : psi_grad) g *= scale;
      }
    }
    for (std::size_t i = 0; i < st.head.size(); ++i) st.head[i] -= cfg.lr_model * head_res.param_grad[i];
    for (std::size_t i = 0; i < st.psi.size(); ++i) st.psi[i] -= cfg.lr_model * psi_grad[i];
    st.trace.rows.push_back(row);
  }

  RepClassifier model;
  model.psi = MlpHypothesis{st.psi_arch, std::move(st.psi)};
  model.head = MlpHypothesis{st.head_arch, std::move(st.head)};
  model.latent_dim = cfg.latent_dim;
  return {std::move(model), std::move(st.trace)};
}

EvalResult evaluate(const RepClassifier& model, const TransferInstance& inst) {
  EvalResult r;
  for (std::size_t i = 0; i < inst.source.size(); ++i)
    if (model.predict(inst.source.point(i)) == inst.source.labels[i]) r.source_acc += inst.source.weights[i];
  const LabeledDataset& tgt = inst.target_eval();
  for (std::size_t i = 0; i < tgt.size(); ++i)
    if (model.predict(tgt.point(i)) == tgt.labels[i]) r.target_acc += tgt.weights[i];
  return r;
}

double label_mixing_score(const RepClassifier& model, const TransferInstance& inst) {
  const LabeledDataset& src = inst.source;
  const LabeledDataset& tgt = inst.target_eval();
  std::vector<std::vector<double>> zs(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) zs[i] = model.encode(src.point(i));
  double score = 0.0;
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    auto z = model.encode(tgt.point(i));
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < zs.size(); ++j) {
      double d = squared_distance(zs[j], z);
      if (d < best_d) {  // strict: ties keep the smallest index
        best_d = d;
        best = j;
      }
    }
    if (src.labels[best] != tgt.labels[i]) score += tgt.weights[i];
  }
  return score;
}

double knn_probe(const TransferInstance& inst, int k, const MlpHypothesis* encoder) {
  const LabeledDataset& src = inst.source;
  const LabeledDataset& tgt = inst.target_eval();
  if (k < 1 || k > static_cast<int>(src.size()))
    throw ValidationError("knn probe needs 1 <= K <= source point count");
  auto feat = [&](VecView x) {
    if (encoder == nullptr) return std::vector<double>(x.begin(), x.end());
    std::vector<double> z;
    mlp_forward(encoder->arch, encoder->params, x, z);
    return z;
  };
  std::vector<std::vector<double>> fs(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) fs[i] = feat(src.point(i));

  double acc = 0.0;
  std::vector<double> dist(src.size());
  std::vector<double> votes(inst.num_classes());
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    auto z = feat(tgt.point(i));
    for (std::size_t j = 0; j < src.size(); ++j) dist[j] = squared_distance(fs[j], z);
    std::vector<double> sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const double dk = sorted[k - 1];
    std::fill(votes.begin(), votes.end(), 0.0);
    for (std::size_t j = 0; j < src.size(); ++j)
      if (dist[j] <= dk) votes[src.labels[j]] += src.weights[j];
    int pred = 0;
    for (int c = 1; c < inst.num_classes(); ++c)
      if (votes[c] > votes[pred]) pred = c;  // ties to smallest label
    if (pred == tgt.labels[i]) acc += tgt.weights[i];
  }
  return acc;
}

}  // namespace dab

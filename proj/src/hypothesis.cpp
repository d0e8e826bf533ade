#include "dabound/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace dab {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;  // ties to smallest index
  return best;
}

}  // namespace

int predict_label(const Hypothesis& h, VecView x) {
  return std::visit(
      [&](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantHypothesis>) {
          return v.label;
        } else if constexpr (std::is_same_v<T, ThresholdHypothesis>) {
          bool hi = x[v.axis] >= v.tau;
          return (hi != v.flip) ? 1 : 0;
        } else if constexpr (std::is_same_v<T, TableHypothesis>) {
          std::size_t n = v.outputs.size();
          std::size_t best = 0;
          double best_d = std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < n; ++i) {
            VecView p{v.domain_xs.data() + i * v.dim, static_cast<std::size_t>(v.dim)};
            double d = squared_distance(p, x);
            if (d < best_d) {
              best_d = d;
              best = i;
            }
          }
          return v.outputs[best];
        } else if constexpr (std::is_same_v<T, AxisPrototypeHypothesis>) {
          int best = 0;
          double best_d = std::abs(x[v.axis] - v.prototypes[0]);
          for (int c = 1; c < static_cast<int>(v.prototypes.size()); ++c) {
            double d = std::abs(x[v.axis] - v.prototypes[c]);
            if (d < best_d) {
              best_d = d;
              best = c;
            }
          }
          return best;
        } else if constexpr (std::is_same_v<T, LinearHypothesis>) {
          return dot(v.w, x) + v.b >= 0.0 ? 1 : 0;
        } else {
          std::vector<double> out;
          mlp_forward(v.arch, v.params, x, out);
          if (v.arch.mode == OutputMode::l1) return clamp01(out[0]) >= 0.5 ? 1 : 0;
          return argmax(out);
        }
      },
      h);
}

double predict_score(const Hypothesis& h, VecView x) {
  if (const auto* lin = std::get_if<LinearHypothesis>(&h))
    return clamp01(dot(lin->w, x) + lin->b);
  if (const auto* mlp = std::get_if<MlpHypothesis>(&h)) {
    if (mlp->arch.mode != OutputMode::l1)
      throw ValidationError("predict_score requires an l1-mode hypothesis");
    std::vector<double> out;
    mlp_forward(mlp->arch, mlp->params, x, out);
    return clamp01(out[0]);
  }
  throw ValidationError("hypothesis has no real-valued score");
}

bool has_score(const Hypothesis& h) {
  if (std::holds_alternative<LinearHypothesis>(h)) return true;
  if (const auto* mlp = std::get_if<MlpHypothesis>(&h)) return mlp->arch.mode == OutputMode::l1;
  return false;
}

void FiniteClass::validate() const {
  if (members.empty()) throw ValidationError("finite class '" + name + "' is empty");
}

double risk01(const Hypothesis& h, const LabeledDataset& data) {
  double r = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (predict_label(h, data.point(i)) != data.labels[i]) r += data.weights[i];
  return r;
}

double disagreement(const Hypothesis& h, const Hypothesis& hp, const LabeledDataset& data) {
  double r = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto x = data.point(i);
    if (predict_label(h, x) != predict_label(hp, x)) r += data.weights[i];
  }
  return r;
}

double disagreement(const Hypothesis& h, const Hypothesis& hp, const UnlabeledView& view) {
  double r = 0.0;
  for (std::size_t i = 0; i < view.size(); ++i) {
    auto x = view.point(i);
    if (predict_label(h, x) != predict_label(hp, x)) r += view.weights[i];
  }
  return r;
}

double risk_l1(const Hypothesis& h, const LabeledDataset& data) {
  if (data.num_classes != 2)
    throw ValidationError("risk_l1 is defined for binary-labeled data only");
  double r = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    r += data.weights[i] * std::abs(predict_score(h, data.point(i)) - static_cast<double>(data.labels[i]));
  return r;
}

std::vector<int> predict_all(const Hypothesis& h, const UnlabeledView& view) {
  std::vector<int> out(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) out[i] = predict_label(h, view.point(i));
  return out;
}

std::string hypothesis_to_json(const MlpHypothesis& h) {
  nlohmann::json j;
  j["arch"] = h.arch.layers;
  j["params"] = h.params;
  j["mode"] = output_mode_name(h.arch.mode);
  return j.dump();
}

MlpHypothesis hypothesis_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("bad hypothesis JSON: ") + e.what());
  }
  MlpHypothesis h;
  h.arch.layers = j.at("arch").get<std::vector<int>>();
  h.arch.mode = output_mode_from_name(j.at("mode").get<std::string>());
  h.params = j.at("params").get<std::vector<double>>();
  h.arch.validate();
  if (static_cast<int>(h.params.size()) != h.arch.param_count())
    throw ValidationError("hypothesis params length does not match arch");
  return h;
}

}  // namespace dab

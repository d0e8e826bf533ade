#include "dabound/transfers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dabound/rng.hpp"

namespace dab {

std::string gen_kind_name(GenKind k) {
  switch (k) {
    case GenKind::gaussian_pair: return "gaussian_pair";
    case GenKind::mixup_swap: return "mixup_swap";
    case GenKind::prior_shift: return "prior_shift";
    case GenKind::confounder: return "confounder";
    case GenKind::invariance_flip: return "invariance_flip";
  }
  return "gaussian_pair";
}

GenKind gen_kind_from_name(const std::string& s) {
  if (s == "gaussian_pair") return GenKind::gaussian_pair;
  if (s == "mixup_swap") return GenKind::mixup_swap;
  if (s == "prior_shift") return GenKind::prior_shift;
  if (s == "confounder") return GenKind::confounder;
  if (s == "invariance_flip") return GenKind::invariance_flip;
  throw ValidationError("unknown generator kind '" + s + "'");
}

void GeneratorSpec::validate() const {
  if (dim < 1) throw ValidationError("spec.dim must be >= 1");
  if (num_classes < 2) throw ValidationError("spec.num_classes must be >= 2");
  if (n_per_class < 1) throw ValidationError("spec.n_per_class must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("spec.sigma must be finite and >= 0");
  if (!(shift >= 0.0) || !std::isfinite(shift)) throw ValidationError("spec.shift must be finite and >= 0");
  if (!std::isfinite(spacing)) throw ValidationError("spec.spacing must be finite");
  if (!ratios.empty()) {
    if (static_cast<int>(ratios.size()) != num_classes)
      throw ValidationError("spec.ratios length must equal num_classes");
    double sum = 0.0;
    for (double r : ratios) {
      if (r < 0.0) throw ValidationError("spec.ratios entries must be >= 0");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("spec.ratios must sum to 1 within 1e-9");
  }
  if (kind == GenKind::confounder && dim < 1 + distractor_axes)
    throw ValidationError("spec.dim must cover signal plus distractor axes");
  if (kind == GenKind::mixup_swap && num_classes != 2)
    throw ValidationError("mixup_swap is a binary construction");
  if (symmetric_layout && num_classes != 2)
    throw ValidationError("symmetric_layout requires two classes");
}

std::vector<double> ramp_ratios(int num_classes, double lo, double hi) {
  std::vector<double> r(num_classes);
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    r[c] = num_classes == 1 ? lo : lo + (hi - lo) * c / static_cast<double>(num_classes - 1);
    sum += r[c];
  }
  for (double& v : r) v /= sum;
  return r;
}

namespace {

std::vector<double> class_center(const GeneratorSpec& spec, int c, double magnitude_offset) {
  std::vector<double> center(spec.dim, 0.0);
  if (spec.symmetric_layout) {
    center[0] = (c == 0 ? -0.5 : 0.5) * spec.spacing;
  } else {
    center[c % spec.dim] = (c + magnitude_offset) * spec.spacing;
  }
  return center;
}

LabeledDataset sample_clusters(const GeneratorSpec& spec, Rng& rng, double magnitude_offset) {
  LabeledDataset ds;
  ds.dim = spec.dim;
  ds.num_classes = spec.num_classes;
  const std::size_t n = static_cast<std::size_t>(spec.num_classes) * spec.n_per_class;
  const double w = 1.0 / static_cast<double>(n);
  for (int c = 0; c < spec.num_classes; ++c) {
    auto center = class_center(spec, c, magnitude_offset);
    for (int k = 0; k < spec.n_per_class; ++k) {
      for (int j = 0; j < spec.dim; ++j) ds.xs.push_back(center[j] + spec.sigma * rng.normal());
      ds.labels.push_back(c);
      ds.weights.push_back(w);
    }
  }
  return ds;
}

}  // namespace

TransferInstance gen_gaussian_pair(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  LabeledDataset source = sample_clusters(spec, rng, spec.center_offset);
  // Target shares the sampled support, translated along axis 0, so the exact
  // W1 between the marginals equals the shift magnitude.
  LabeledDataset target = source;
  for (std::size_t i = 0; i < target.size(); ++i) target.xs[i * spec.dim] += spec.shift;
  TransferInstance inst(std::move(source), std::move(target), ShiftKind::covariate, spec.seed);
  inst.validate();
  return inst;
}

TransferInstance gen_mixup_swap(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  LabeledDataset source = sample_clusters(spec, rng, spec.center_offset);
  // Identical support and weights, conditionals exchanged: the marginals are
  // equal as weighted point sets, so the exact W1 between them is zero.
  LabeledDataset target = source;
  for (int& lab : target.labels) lab = 1 - lab;
  TransferInstance inst(std::move(source), std::move(target), ShiftKind::mixup, spec.seed);
  inst.validate();
  return inst;
}

namespace {

LabeledDataset sample_prior_domain(const GeneratorSpec& spec, Rng& rng) {
  LabeledDataset ds;
  if (spec.dim >= 2) {
    // ring layout in the first two coordinates keeps all class magnitudes
    // equal, so the balanced pair is well-conditioned at any class count
    ds.dim = spec.dim;
    ds.num_classes = spec.num_classes;
    const std::size_t n = static_cast<std::size_t>(spec.num_classes) * spec.n_per_class;
    const double w = 1.0 / static_cast<double>(n);
    const double radius = 2.0 * spec.spacing;
    for (int c = 0; c < spec.num_classes; ++c) {
      const double angle = 6.283185307179586 * c / spec.num_classes;
      for (int k = 0; k < spec.n_per_class; ++k) {
        ds.xs.push_back(radius * std::cos(angle) + spec.sigma * rng.normal());
        ds.xs.push_back(radius * std::sin(angle) + spec.sigma * rng.normal());
        for (int j = 2; j < spec.dim; ++j) ds.xs.push_back(spec.sigma * rng.normal());
        ds.labels.push_back(c);
        ds.weights.push_back(w);
      }
    }
  } else {
    ds = sample_clusters(spec, rng, spec.center_offset);
  }
  return ds;
}

}  // namespace

TransferInstance gen_prior_shift(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  LabeledDataset source = sample_prior_domain(spec, rng);
  const std::vector<double> ratios = spec.ratios.empty() ? ramp_ratios(spec.num_classes) : spec.ratios;
  LabeledDataset target_base = spec.fresh_target_sample ? sample_prior_domain(spec, rng) : source;
  LabeledDataset target = resample_prior(target_base, ratios, spec.seed);
  TransferInstance inst(std::move(source), std::move(target), ShiftKind::prior_shift, spec.seed);
  inst.validate();
  return inst;
}

TransferInstance gen_confounder(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.dim < 2) throw ValidationError("confounder requires dim >= 2");
  Rng rng(spec.seed);
  const std::size_t n = static_cast<std::size_t>(spec.num_classes) * spec.n_per_class;
  const double w = 1.0 / static_cast<double>(n);

  auto make_domain = [&](bool decorrelate) {
    LabeledDataset ds;
    ds.dim = spec.dim;
    ds.num_classes = spec.num_classes;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i) % spec.num_classes;
    std::vector<int> distractor_labels = labels;
    if (decorrelate) {
      for (std::size_t i = n - 1; i > 0; --i)
        std::swap(distractor_labels[i], distractor_labels[rng.below(i + 1)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      // axis 0: signal tied to the label in both domains
      ds.xs.push_back(labels[i] * spec.spacing + spec.sigma * rng.normal());
      for (int a = 1; a <= spec.distractor_axes; ++a)
        ds.xs.push_back(distractor_labels[i] * spec.spacing + spec.sigma * rng.normal());
      for (int a = 1 + spec.distractor_axes; a < spec.dim; ++a)
        ds.xs.push_back(spec.sigma * rng.normal());
      ds.labels.push_back(labels[i]);
      ds.weights.push_back(w);
    }
    return ds;
  };

  LabeledDataset source = make_domain(false);
  LabeledDataset target = make_domain(true);
  TransferInstance inst(std::move(source), std::move(target), ShiftKind::confounder, spec.seed);
  inst.validate();
  return inst;
}

namespace {

// Class directions for the flip family: unit vectors kept apart from each
// other and from each other's antipodes, so negation never drops a cluster
// onto a different class. The separation threshold relaxes if the dimension
// cannot host the requested count.
std::vector<std::vector<double>> flip_directions(int num_classes, int dim, Rng& rng) {
  std::vector<std::vector<double>> dirs;
  double max_dot = 0.7;
  int tries = 0;
  while (static_cast<int>(dirs.size()) < num_classes) {
    std::vector<double> u(dim);
    double norm = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (double& v : u) v /= norm;
    bool ok = true;
    for (const auto& w : dirs)
      if (std::abs(dot(u, w)) > max_dot) {
        ok = false;
        break;
      }
    if (ok) {
      dirs.push_back(std::move(u));
      tries = 0;
    } else if (++tries > 200) {
      max_dot = std::min(0.999, max_dot + 0.05);
      tries = 0;
    }
  }
  return dirs;
}

}  // namespace

TransferInstance gen_invariance_flip(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  LabeledDataset source;
  if (spec.symmetric_layout) {
    source = sample_clusters(spec, rng, 0.0);
  } else {
    // clusters at radius 2*spacing along angularly separated directions
    auto dirs = flip_directions(spec.num_classes, spec.dim, rng);
    const double radius = 2.0 * spec.spacing;
    source.dim = spec.dim;
    source.num_classes = spec.num_classes;
    const std::size_t n = static_cast<std::size_t>(spec.num_classes) * spec.n_per_class;
    const double w = 1.0 / static_cast<double>(n);
    for (int c = 0; c < spec.num_classes; ++c) {
      for (int k = 0; k < spec.n_per_class; ++k) {
        for (int j = 0; j < spec.dim; ++j)
          source.xs.push_back(radius * dirs[c][j] + spec.sigma * rng.normal());
        source.labels.push_back(c);
        source.weights.push_back(w);
      }
    }
  }
  LabeledDataset target = source;
  for (double& v : target.xs) v = -v;
  TransferInstance inst(std::move(source), std::move(target), ShiftKind::invariance, spec.seed);
  inst.validate();
  return inst;
}

TransferInstance generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GenKind::gaussian_pair: return gen_gaussian_pair(spec);
    case GenKind::mixup_swap: return gen_mixup_swap(spec);
    case GenKind::prior_shift: return gen_prior_shift(spec);
    case GenKind::confounder: return gen_confounder(spec);
    case GenKind::invariance_flip: return gen_invariance_flip(spec);
  }
  throw ValidationError("unknown generator kind");
}

}  // namespace dab

#include "dabound/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dabound/rng.hpp"

namespace dab {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, std::size_t line_no, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ValidationError("line " + std::to_string(line_no) + ": malformed " + what + " '" + tok + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

double LabeledDataset::class_mass(int c) const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    if (labels[i] == c) m += weights[i];
  return m;
}

void LabeledDataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw ValidationError("dataset is empty");
  if (weights.size() != n) throw ValidationError("weights length != labels length");
  if (dim <= 0) throw ValidationError("dataset dim must be positive");
  if (xs.size() != n * static_cast<std::size_t>(dim))
    throw ValidationError("points storage does not match size * dim");
  if (num_classes <= 0) throw ValidationError("num_classes must be positive");
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw ValidationError("row " + std::to_string(i) + ": label " + std::to_string(labels[i]) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    if (!(weights[i] >= 0.0))
      throw ValidationError("row " + std::to_string(i) + ": negative weight");
    mass += weights[i];
  }
  if (std::abs(mass - 1.0) > 1e-12)
    throw ValidationError("weights sum to " + format_double(mass) + ", expected 1 within 1e-12");
  for (double v : xs)
    if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
}

UnlabeledView unlabeled(const LabeledDataset& ds) {
  return UnlabeledView{ds.xs, ds.weights, ds.dim};
}

std::string shift_kind_name(ShiftKind k) {
  switch (k) {
    case ShiftKind::covariate: return "covariate";
    case ShiftKind::prior_shift: return "prior_shift";
    case ShiftKind::mixup: return "mixup";
    case ShiftKind::confounder: return "confounder";
    case ShiftKind::invariance: return "invariance";
  }
  return "covariate";
}

ShiftKind shift_kind_from_name(const std::string& name) {
  if (name == "covariate") return ShiftKind::covariate;
  if (name == "prior_shift") return ShiftKind::prior_shift;
  if (name == "mixup") return ShiftKind::mixup;
  if (name == "confounder") return ShiftKind::confounder;
  if (name == "invariance") return ShiftKind::invariance;
  throw ValidationError("unknown shift_kind '" + name + "'");
}

void TransferInstance::validate() const {
  source.validate();
  target_.validate();
  if (source.dim != target_.dim) throw ValidationError("source.dim != target.dim");
  if (source.num_classes != target_.num_classes)
    throw ValidationError("source.num_classes != target.num_classes");
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_csv_line(line);
  bool has_weight = !header.empty() && header.back() == "weight";
  std::size_t feature_cols = header.size() - 1 - (has_weight ? 1 : 0);
  if (header.size() < 2 || header[0] != "x0")
    throw ValidationError(path + ": header must start with x0 and contain a label column");
  for (std::size_t i = 0; i < feature_cols; ++i) {
    if (header[i] != "x" + std::to_string(i))
      throw ValidationError(path + ": unexpected header column '" + header[i] + "'");
  }
  if (header[feature_cols] != "label")
    throw ValidationError(path + ": expected 'label' column after features");

  LabeledDataset ds;
  ds.dim = static_cast<int>(feature_cols);
  std::size_t line_no = 1;
  bool any_weight = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto toks = split_csv_line(line);
    std::size_t expected = feature_cols + 1 + (has_weight ? 1 : 0);
    if (toks.size() != expected)
      throw ValidationError(path + ": line " + std::to_string(line_no) + ": expected " +
                            std::to_string(expected) + " columns, got " + std::to_string(toks.size()));
    for (std::size_t i = 0; i < feature_cols; ++i)
      ds.xs.push_back(parse_double(toks[i], line_no, "feature"));
    double lab = parse_double(toks[feature_cols], line_no, "label");
    if (lab != std::floor(lab) || lab < 0)
      throw ValidationError(path + ": line " + std::to_string(line_no) + ": label must be a nonnegative integer");
    ds.labels.push_back(static_cast<int>(lab));
    if (has_weight) {
      double w = parse_double(toks[feature_cols + 1], line_no, "weight");
      if (w < 0.0)
        throw ValidationError(path + ": line " + std::to_string(line_no) + ": negative weight");
      ds.weights.push_back(w);
      any_weight = true;
    }
  }
  if (ds.labels.empty()) throw ValidationError(path + ": no data rows");
  if (!any_weight) ds.weights.assign(ds.labels.size(), 1.0 / static_cast<double>(ds.labels.size()));
  ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  ds.validate();
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  for (int i = 0; i < ds.dim; ++i) out << "x" << i << ",";
  out << "label,weight\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto p = ds.point(i);
    for (int j = 0; j < ds.dim; ++j) out << format_double(p[j]) << ",";
    out << ds.labels[i] << "," << format_double(ds.weights[i]) << "\n";
  }
  if (!out) throw ValidationError("write failure on '" + path + "'");
}

TransferInstance load_instance(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open manifest '" + manifest_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("manifest '" + manifest_path + "': " + e.what());
  }
  for (const char* key : {"source", "target", "shift_kind", "seed"})
    if (!j.contains(key)) throw ValidationError("manifest missing field '" + std::string(key) + "'");
  auto base = std::filesystem::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  TransferInstance inst(load_dataset(resolve(j["source"].get<std::string>())),
                        load_dataset(resolve(j["target"].get<std::string>())),
                        shift_kind_from_name(j["shift_kind"].get<std::string>()),
                        j["seed"].get<std::uint64_t>());
  inst.validate();
  return inst;
}

void save_instance(const TransferInstance& inst, const std::string& dir, const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string src_name = stem + "_source.csv";
  const std::string tgt_name = stem + "_target.csv";
  save_dataset(inst.source, (fs::path(dir) / src_name).string());
  save_dataset(inst.target_eval(), (fs::path(dir) / tgt_name).string());
  nlohmann::json j;
  j["source"] = src_name;
  j["target"] = tgt_name;
  j["shift_kind"] = shift_kind_name(inst.shift_kind);
  j["seed"] = inst.seed;
  std::ofstream out((fs::path(dir) / (stem + ".json")).string());
  out << j.dump(2) << "\n";
  if (!out) throw ValidationError("write failure for instance manifest");
}

LabeledDataset resample_prior(const LabeledDataset& ds, std::span<const double> class_ratios, std::uint64_t /*seed*/) {
  ds.validate();
  if (static_cast<int>(class_ratios.size()) != ds.num_classes)
    throw ValidationError("class_ratios length " + std::to_string(class_ratios.size()) +
                          " != num_classes " + std::to_string(ds.num_classes));
  double total = 0.0;
  for (double r : class_ratios) {
    if (r < 0.0) throw ValidationError("class ratio must be nonnegative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("class ratios sum to " + format_double(total) + ", expected 1 within 1e-9");

  std::vector<double> mass(ds.num_classes, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) mass[ds.labels[i]] += ds.weights[i];

  LabeledDataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int c = ds.labels[i];
    if (class_ratios[c] == 0.0) {
      out.weights[i] = 0.0;
      continue;
    }
    if (mass[c] <= 0.0)
      throw ValidationError("requested mass " + format_double(class_ratios[c]) +
                            " on class " + std::to_string(c) + " which has no mass in the dataset");
    out.weights[i] = ds.weights[i] * class_ratios[c] / mass[c];
  }
  for (int c = 0; c < ds.num_classes; ++c) {
    if (class_ratios[c] > 0.0 && mass[c] <= 0.0)
      throw ValidationError("requested mass on absent class " + std::to_string(c));
  }
  out.validate();
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double fraction, std::uint64_t seed) {
  ds.validate();
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must be in (0,1)");
  const std::size_t n = ds.size();
  std::size_t k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k == 0 || k == n)
    throw ValidationError("split fraction " + format_double(fraction) + " produces an empty side for n=" +
                          std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = rng.below(i + 1);
    std::swap(idx[i], idx[j]);
  }
  auto take = [&](std::size_t lo, std::size_t hi) {
    LabeledDataset part;
    part.dim = ds.dim;
    part.num_classes = ds.num_classes;
    std::vector<std::size_t> sel(idx.begin() + lo, idx.begin() + hi);
    std::sort(sel.begin(), sel.end());
    double mass = 0.0;
    for (std::size_t i : sel) mass += ds.weights[i];
    if (mass <= 0.0) throw ValidationError("split side carries zero mass");
    for (std::size_t i : sel) {
      auto p = ds.point(i);
      part.xs.insert(part.xs.end(), p.begin(), p.end());
      part.labels.push_back(ds.labels[i]);
      part.weights.push_back(ds.weights[i] / mass);
    }
    return part;
  };
  return {take(0, k), take(k, n)};
}

}  // namespace dab

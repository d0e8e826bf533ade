#include "dabound/runner.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "dabound/alignlab.hpp"
#include "dabound/bounds.hpp"
#include "dabound/divergence.hpp"
#include "dabound/lipschitz.hpp"
#include "dabound/metalearn.hpp"
#include "dabound/rng.hpp"
#include "dabound/svg.hpp"
#include "dabound/transfers.hpp"

namespace dab {

std::string format_shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

using nlohmann::json;

const std::set<std::string> kSubcommands = {"gen", "estimate", "bound", "sweep",
                                            "align", "probe", "meta"};

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

const json& require_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing required field");
  return j[key];
}

double get_num(const json& j, const std::string& key, const std::string& path, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) fail(path + "." + key, "expected a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return j[key].get<int>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean()) fail(path + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

std::string get_str(const json& j, const std::string& key, const std::string& path,
                    const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string()) fail(path + "." + key, "expected a string");
  return j[key].get<std::string>();
}

std::vector<double> get_num_list(const json& j, const std::string& key, const std::string& path,
                                 std::vector<double> dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_array()) fail(path + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) fail(path + "." + key, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> get_int_list(const json& j, const std::string& key, const std::string& path,
                              std::vector<int> dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_array()) fail(path + "." + key, "expected an array of integers");
  std::vector<int> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer()) fail(path + "." + key, "expected an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

GeneratorSpec parse_gen_spec(const json& j, const std::string& path, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = gen_kind_from_name(get_str(j, "kind", path, "gaussian_pair"));
  spec.dim = get_int(j, "dim", path, spec.dim);
  spec.num_classes = get_int(j, "num_classes", path, spec.num_classes);
  spec.n_per_class = get_int(j, "n_per_class", path, spec.n_per_class);
  spec.sigma = get_num(j, "sigma", path, spec.sigma);
  spec.shift = get_num(j, "shift", path, spec.shift);
  spec.spacing = get_num(j, "spacing", path, spec.spacing);
  spec.center_offset = get_num(j, "center_offset", path, spec.center_offset);
  spec.ratios = get_num_list(j, "ratios", path, {});
  spec.distractor_axes = get_int(j, "distractor_axes", path, spec.distractor_axes);
  spec.symmetric_layout = get_bool(j, "symmetric_layout", path, spec.symmetric_layout);
  spec.fresh_target_sample = get_bool(j, "fresh_target_sample", path, spec.fresh_target_sample);
  spec.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : seed;
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
  return spec;
}

// Instance source: {"instance": manifest} or {"gen": {...}}.
TransferInstance resolve_instance(const json& j, const std::string& path, std::uint64_t seed) {
  const bool has_manifest = j.contains("instance");
  const bool has_gen = j.contains("gen");
  if (has_manifest == has_gen)
    fail(path, "exactly one of 'instance' (manifest path) or 'gen' (generator block) is required");
  if (has_manifest) return load_instance(require_field(j, "instance", path).get<std::string>());
  return generate(parse_gen_spec(j["gen"], path + ".gen", seed));
}

// Axis-threshold grid class over the instance's joint support, both
// polarities, plus the two constants.
FiniteClass threshold_grid_class(const TransferInstance& inst, int per_axis) {
  FiniteClass cls;
  cls.name = "threshold_grid";
  const auto sx = unlabeled(inst.source);
  const auto tx = inst.target_unlabeled();
  for (int axis = 0; axis < inst.dim(); ++axis) {
    double lo = sx.point(0)[axis], hi = lo;
    for (std::size_t i = 0; i < sx.size(); ++i) {
      lo = std::min(lo, sx.point(i)[axis]);
      hi = std::max(hi, sx.point(i)[axis]);
    }
    for (std::size_t i = 0; i < tx.size(); ++i) {
      lo = std::min(lo, tx.point(i)[axis]);
      hi = std::max(hi, tx.point(i)[axis]);
    }
    for (int t = 0; t < per_axis; ++t) {
      const double tau = per_axis == 1 ? 0.5 * (lo + hi)
                                       : lo + (hi - lo) * t / static_cast<double>(per_axis - 1);
      cls.members.push_back(ThresholdHypothesis{axis, tau, false});
      cls.members.push_back(ThresholdHypothesis{axis, tau, true});
    }
  }
  cls.members.push_back(ConstantHypothesis{0});
  cls.members.push_back(ConstantHypothesis{1});
  return cls;
}

json divergence_json(const DivergenceEstimate& e) { return json::parse(e.json()); }

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  if (!out) throw ValidationError("cannot write '" + p.string() + "'");
}

struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::string> names;
  void write(const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    names.push_back(name);
  }
};

// ---- subcommand handlers ----

json run_gen(const RunConfig& cfg, Artifacts& art) {
  GeneratorSpec spec = parse_gen_spec(cfg.params, "gen", cfg.seed);
  TransferInstance inst = generate(spec);
  save_instance(inst, art.dir.string(), "instance");
  art.names.push_back("instance_source.csv");
  art.names.push_back("instance_target.csv");
  art.names.push_back("instance.json");
  if (cfg.emit_plots) {
    std::vector<ScatterPoint> pts;
    auto add = [&](const LabeledDataset& ds, int domain) {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        auto p = ds.point(i);
        pts.push_back({p[0], ds.dim >= 2 ? p[1] : 0.0, ds.labels[i], domain});
      }
    };
    add(inst.source, 0);
    add(inst.target_eval(), 1);
    art.write("data.svg", svg_scatter(pts, gen_kind_name(spec.kind)));
  }
  json payload;
  payload["kind"] = gen_kind_name(spec.kind);
  payload["dim"] = inst.dim();
  payload["num_classes"] = inst.num_classes();
  payload["source_rows"] = inst.source.size();
  payload["target_rows"] = inst.target_eval().size();
  payload["shift_kind"] = shift_kind_name(inst.shift_kind);
  return payload;
}

json run_estimate(const RunConfig& cfg, Artifacts&) {
  const json& p = cfg.params;
  const std::string method = get_str(p, "method", "estimate", "");
  if (method.empty()) fail("estimate.method", "missing required field");

  UnlabeledView sx, tx;
  TransferInstance inst;
  bool have_instance = false;
  if (p.contains("source_csv") || p.contains("target_csv")) {
    LabeledDataset s = load_dataset(require_field(p, "source_csv", "estimate").get<std::string>());
    LabeledDataset t = load_dataset(require_field(p, "target_csv", "estimate").get<std::string>());
    sx = unlabeled(s);
    tx = unlabeled(t);
    if (method == "hdh-exact" || method == "single-hyp" || method == "mansour") {
      int c = std::max(s.num_classes, t.num_classes);
      s.num_classes = t.num_classes = c;
      inst = TransferInstance(std::move(s), std::move(t), ShiftKind::covariate, cfg.seed);
      have_instance = true;
    }
  } else {
    inst = resolve_instance(p, "estimate", cfg.seed);
    sx = unlabeled(inst.source);
    tx = inst.target_unlabeled();
    have_instance = true;
  }

  DivergenceEstimate est;
  if (method == "exact-ot") {
    est = wasserstein1_exact(sx, tx);
  } else if (method == "sinkhorn") {
    est = wasserstein1_sinkhorn(sx, tx, get_num(p, "reg", "estimate", 1e-3),
                                get_int(p, "max_iter", "estimate", 20000),
                                get_num(p, "tol", "estimate", 1e-9));
  } else if (method == "hdh-exact" || method == "single-hyp" || method == "mansour") {
    if (!have_instance) fail("estimate", "finite-class methods need an instance");
    FiniteClass cls = threshold_grid_class(inst, get_int(p, "thresholds", "estimate", 9));
    if (method == "hdh-exact") {
      est = hdh_divergence_exact(cls, sx, tx);
    } else if (method == "mansour") {
      est = mansour_discrepancy(cls, sx, tx);
    } else {
      const int hi = get_int(p, "h_index", "estimate", 0);
      if (hi < 0 || hi >= static_cast<int>(cls.size())) fail("estimate.h_index", "outside class");
      est = single_hyp_discrepancy_exact(cls.members[hi], cls, sx, tx);
    }
  } else if (method == "hdh-adversarial") {
    AdversarialConfig acfg;
    acfg.arch.layers = {sx.dim};
    for (int h : get_int_list(p, "hidden", "estimate", {8})) acfg.arch.layers.push_back(h);
    acfg.arch.layers.push_back(1);
    acfg.blocks = get_int(p, "blocks", "estimate", acfg.blocks);
    acfg.steps_per_block = get_int(p, "steps_per_block", "estimate", acfg.steps_per_block);
    acfg.lr = get_num(p, "lr", "estimate", acfg.lr);
    acfg.restarts = get_int(p, "restarts", "estimate", acfg.restarts);
    est = hdh_divergence_adversarial(acfg, sx, tx, cfg.seed);
  } else {
    fail("estimate.method", "unknown method '" + method + "'");
  }

  json payload;
  payload["method_requested"] = method;
  payload["estimate"] = divergence_json(est);
  std::cout << "estimate value=" << format_shortest(est.value)
            << " method=" << div_method_name(est.method)
            << " status=" << div_status_name(est.status) << "\n";
  return payload;
}

json run_bound(const RunConfig& cfg, Artifacts&) {
  const json& p = cfg.params;
  const std::string kind = get_str(p, "kind", "bound", "");
  TransferInstance inst = resolve_instance(p, "bound", cfg.seed);

  BoundReport report;
  if (kind == "ben-david" || kind == "zhang" || kind == "mansour") {
    FiniteClass cls = threshold_grid_class(inst, get_int(p, "thresholds", "bound", 9));
    const int hi = get_int(p, "h_index", "bound", 0);
    if (hi < 0 || hi >= static_cast<int>(cls.size())) fail("bound.h_index", "outside class");
    if (kind == "ben-david") report = assemble_ben_david(cls, hi, inst);
    else if (kind == "zhang") report = assemble_zhang(cls, hi, inst);
    else report = assemble_mansour(cls, hi, inst);
  } else if (kind == "wasserstein") {
    if (inst.num_classes() != 2) fail("bound.instance", "the wasserstein bound needs a binary instance");
    const double k = get_num(p, "k", "bound", 1.0);
    if (!(k > 0.0)) fail("bound.k", "must be > 0");
    MlpArch arch;
    arch.layers = {inst.dim()};
    for (int h : get_int_list(p, "hidden", "bound", {8})) arch.layers.push_back(h);
    arch.layers.push_back(1);
    arch.mode = OutputMode::l1;
    OptConfig topt;
    topt.loss = LossKind::l1;
    topt.steps = get_int(p, "train_steps", "bound", 400);
    topt.lr = get_num(p, "train_lr", "bound", 0.3);
    topt.project_k = k;
    MlpHypothesis h = train_supervised(arch, inst.source, topt, derive_seed(cfg.seed, 1));
    OptConfig wopt = topt;
    wopt.steps = get_int(p, "witness_steps", "bound", 400);
    auto lam = lambda_estimate_trained(arch, inst.source, inst.target_eval(), wopt,
                                       get_int(p, "restarts", "bound", 3), derive_seed(cfg.seed, 2));
    report = assemble_wasserstein(h, inst, lam, k, "trained");
  } else {
    fail("bound.kind", "expected ben-david | zhang | mansour | wasserstein");
  }
  std::cout << "bound " << bound_kind_name(report.kind) << " rhs=" << format_shortest(report.rhs)
            << " target=" << format_shortest(report.target_risk)
            << " slack=" << format_shortest(report.slack) << "\n";
  return json::parse(report.json());
}

json run_sweep(const RunConfig& cfg, Artifacts& art) {
  const json& p = cfg.params;
  TransferInstance inst = resolve_instance(p, "sweep", cfg.seed);

  SweepConfig sc;
  sc.k_grid = get_num_list(p, "k_grid", "sweep",
                           {0.01, 0.0316, 0.1, 0.316, 1.0, 3.16, 10.0, 31.6, 100.0});
  sc.arch.layers = {inst.dim()};
  for (int h : get_int_list(p, "hidden", "sweep", {8})) sc.arch.layers.push_back(h);
  sc.arch.layers.push_back(1);
  sc.arch.mode = OutputMode::l1;
  sc.train_opt.steps = get_int(p, "train_steps", "sweep", 2000);
  sc.train_opt.lr = get_num(p, "train_lr", "sweep", 0.1);
  sc.train_opt.momentum = get_num(p, "momentum", "sweep", 0.9);
  sc.train_opt.loss = LossKind::l1;
  sc.witness_opt = sc.train_opt;
  sc.witness_opt.steps = get_int(p, "witness_steps", "sweep", 2000);
  sc.restarts = get_int(p, "restarts", "sweep", 3);
  sc.seed = cfg.seed;
  sc.jobs = cfg.jobs;

  TradeoffCurve curve = tradeoff_sweep(inst, sc);
  curve.instance_id = p.contains("instance") ? p["instance"].get<std::string>()
                                             : get_str(p["gen"], "kind", "sweep.gen", "gaussian_pair");

  std::string csv = "k,source_l1,lambda_upper,w1,rhs,target_l1,ok\n";
  for (const auto& r : curve.rows)
    csv += format_shortest(r.k) + "," + format_shortest(r.source_l1) + "," +
           format_shortest(r.lambda_upper) + "," + format_shortest(r.w1) + "," +
           format_shortest(r.rhs) + "," + format_shortest(r.target_l1) + "," +
           (r.ok ? "1" : "0") + "\n";
  art.write("sweep.csv", csv);

  if (cfg.emit_plots) {
    SvgSeries rhs{"rhs", {}, {}}, src{"source_l1", {}, {}}, lam{"lambda_upper", {}, {}};
    for (const auto& r : curve.rows) {
      if (!r.ok) continue;
      rhs.xs.push_back(r.k);
      rhs.ys.push_back(r.rhs);
      src.xs.push_back(r.k);
      src.ys.push_back(r.source_l1);
      lam.xs.push_back(r.k);
      lam.ys.push_back(r.lambda_upper);
    }
    art.write("sweep.svg", svg_line_chart({rhs, src, lam}, "expressivity/invariance trade-off",
                                          true, "K (log)", "term value"));
  }

  json payload;
  payload["instance_id"] = curve.instance_id;
  payload["w1"] = curve.w1;
  payload["config"] = json{{"k_grid", sc.k_grid},
                           {"hidden", json(p.contains("hidden") ? get_int_list(p, "hidden", "sweep", {8})
                                                                : std::vector<int>{8})},
                           {"train_steps", sc.train_opt.steps},
                           {"train_lr", sc.train_opt.lr},
                           {"momentum", sc.train_opt.momentum},
                           {"witness_steps", sc.witness_opt.steps},
                           {"restarts", sc.restarts}};
  json rows = json::array();
  for (const auto& r : curve.rows) {
    json row;
    row["k"] = r.k;
    row["source_l1"] = r.source_l1;
    row["lambda_upper"] = r.lambda_upper;
    row["w1"] = r.w1;
    row["rhs"] = r.rhs;
    row["target_l1"] = r.target_l1;
    row["ok"] = r.ok;
    if (!r.ok) row["note"] = r.note;
    rows.push_back(row);
  }
  payload["rows"] = rows;
  return payload;
}

json run_align(const RunConfig& cfg, Artifacts& art) {
  const json& p = cfg.params;
  TransferInstance inst = resolve_instance(p, "align", cfg.seed);

  AlignConfig ac;
  ac.method = align_method_from_name(get_str(p, "method", "align", "source_only"));
  ac.weight = get_num(p, "weight", "align", 1.0);
  ac.psi_hidden = get_int_list(p, "psi_hidden", "align", {16});
  ac.latent_dim = get_int(p, "latent_dim", "align", 2);
  ac.head_hidden = get_int_list(p, "head_hidden", "align", {});
  ac.critic_hidden = get_int_list(p, "critic_hidden", "align", {8});
  ac.steps = get_int(p, "steps", "align", 300);
  ac.lr_model = get_num(p, "lr_model", "align", 0.2);
  ac.lr_critic = get_num(p, "lr_critic", "align", 0.2);
  ac.critic_steps = get_int(p, "critic_steps", "align", 5);
  ac.critic_decay = get_num(p, "critic_decay", "align", ac.critic_decay);
  ac.model_grad_clip = get_num(p, "grad_clip", "align", ac.model_grad_clip);
  ac.seed = cfg.seed;

  auto [model, trace] = train_aligned(inst, ac);
  EvalResult ev = evaluate(model, inst);
  const double mixing = label_mixing_score(model, inst);

  // trained encoder, consumable by `probe --set probe.encoder_json=...`
  art.write("encoder.json", hypothesis_to_json(model.psi) + "\n");

  std::string csv = "step,source_ce,align_term,critic_loss,hard_disparity\n";
  for (const auto& r : trace.rows)
    csv += std::to_string(r.step) + "," + format_shortest(r.source_ce) + "," +
           format_shortest(r.align_term) + "," + format_shortest(r.critic_loss) + "," +
           format_shortest(r.hard_disparity) + "\n";
  art.write("trace.csv", csv);

  if (cfg.emit_plots) {
    std::vector<ScatterPoint> pts;
    for (std::size_t i = 0; i < inst.source.size(); ++i) {
      auto z = model.encode(inst.source.point(i));
      pts.push_back({z[0], z.size() >= 2 ? z[1] : 0.0, inst.source.labels[i], 0});
    }
    const LabeledDataset& tgt = inst.target_eval();
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      auto z = model.encode(tgt.point(i));
      pts.push_back({z[0], z.size() >= 2 ? z[1] : 0.0, tgt.labels[i], 1});
    }
    art.write("latent.svg", svg_scatter(pts, "latent space (" + trace.method + ")"));
  }

  json payload;
  payload["method"] = align_method_name(ac.method);
  payload["source_acc"] = ev.source_acc;
  payload["target_acc"] = ev.target_acc;
  payload["mixing_score"] = mixing;
  payload["critic_collapse"] = trace.critic_collapse;
  std::cout << "align method=" << align_method_name(ac.method)
            << " source_acc=" << format_shortest(ev.source_acc)
            << " target_acc=" << format_shortest(ev.target_acc)
            << " mixing=" << format_shortest(mixing) << "\n";
  return payload;
}

json run_probe(const RunConfig& cfg, Artifacts&) {
  const json& p = cfg.params;
  TransferInstance inst = resolve_instance(p, "probe", cfg.seed);
  const int k = get_int(p, "k", "probe", 50);
  std::optional<MlpHypothesis> encoder;
  if (p.contains("encoder_json")) {
    std::ifstream in(p["encoder_json"].get<std::string>());
    if (!in) fail("probe.encoder_json", "cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    encoder = hypothesis_from_json(text);
  }
  const double acc = knn_probe(inst, k, encoder ? &*encoder : nullptr);
  json payload;
  payload["k"] = k;
  payload["knn_accuracy"] = acc;
  payload["features"] = encoder ? "encoder" : "identity";
  std::cout << "probe k=" << k << " accuracy=" << format_shortest(acc) << "\n";
  return payload;
}

json run_meta(const RunConfig& cfg, Artifacts& art) {
  const json& p = cfg.params;
  // default family seed is fixed: the task geometry is a benchmark choice,
  // independent of the run seed that drives training and evaluation
  json genblk = p.contains("gen") ? p["gen"] : json{{"kind", "invariance_flip"},
                                                    {"dim", 4},
                                                    {"num_classes", 12},
                                                    {"n_per_class", 20},
                                                    {"sigma", 0.25},
                                                    {"seed", 21}};
  TransferInstance family = generate(parse_gen_spec(genblk, "meta.gen", cfg.seed));

  MetaConfig mc;
  mc.ways = get_int(p, "ways", "meta", 3);
  mc.inner_steps = get_int(p, "inner_steps", "meta", 2);
  mc.inner_lr = get_num(p, "inner_lr", "meta", 1.0);
  mc.outer_lr = get_num(p, "outer_lr", "meta", 0.1);
  mc.meta_iterations = get_int(p, "meta_iterations", "meta", 5000);
  const int c = family.num_classes();
  std::vector<int> default_train, default_test;
  for (int i = 0; i < c; ++i) (i < (2 * c) / 3 ? default_train : default_test).push_back(i);
  mc.meta_train_classes = get_int_list(p, "meta_train_classes", "meta", default_train);
  mc.meta_test_classes = get_int_list(p, "meta_test_classes", "meta", default_test);
  mc.hidden = get_int_list(p, "hidden", "meta", {32});
  mc.eval_tasks = get_int(p, "eval_tasks", "meta", 10);
  mc.pretrain_steps = get_int(p, "pretrain_steps", "meta", 1000);
  mc.pretrain_lr = get_num(p, "pretrain_lr", "meta", 0.3);
  mc.dann.weight = get_num(p, "dann_weight", "meta", 1.0);
  mc.dann.steps = get_int(p, "dann_steps", "meta", 300);
  mc.dann.lr_model = get_num(p, "dann_lr", "meta", 0.2);
  mc.dann.lr_critic = get_num(p, "dann_lr_critic", "meta", 0.3);
  mc.seed = cfg.seed;
  try {
    mc.validate();
  } catch (const ValidationError& e) {
    fail("meta", e.what());
  }

  BaselineTable table = run_baselines(family, mc);

  // one row per family, one mean/sd column pair per baseline
  std::string csv = "family";
  for (const auto& row : table.rows) csv += "," + row.name + "_mean," + row.name + "_sd";
  csv += "\n" + gen_kind_name(parse_gen_spec(genblk, "meta.gen", cfg.seed).kind);
  for (const auto& row : table.rows)
    csv += "," + format_shortest(row.mean) + "," + format_shortest(row.sd);
  csv += "\n";
  art.write("meta.csv", csv);

  std::string tasks_csv = "baseline";
  for (int t = 0; t < mc.eval_tasks; ++t) tasks_csv += ",task" + std::to_string(t);
  tasks_csv += "\n";
  for (const auto& row : table.rows) {
    tasks_csv += row.name;
    for (double a : row.per_task) tasks_csv += "," + format_shortest(a);
    tasks_csv += "\n";
  }
  art.write("meta_tasks.csv", tasks_csv);

  json payload;
  payload["meta_variant"] = "first_order";
  payload["config"] = json{{"ways", mc.ways},
                           {"inner_steps", mc.inner_steps},
                           {"inner_lr", mc.inner_lr},
                           {"outer_lr", mc.outer_lr},
                           {"meta_iterations", mc.meta_iterations},
                           {"meta_train_classes", mc.meta_train_classes},
                           {"meta_test_classes", mc.meta_test_classes},
                           {"hidden", mc.hidden},
                           {"eval_tasks", mc.eval_tasks},
                           {"pretrain_steps", mc.pretrain_steps},
                           {"dann_steps", mc.dann.steps}};
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r;
    r["name"] = row.name;
    r["mean"] = row.mean;
    r["sd"] = row.sd;
    r["per_task"] = row.per_task;
    rows.push_back(r);
    std::cout << "meta " << row.name << " mean=" << format_shortest(row.mean)
              << " sd=" << format_shortest(row.sd) << "\n";
  }
  payload["rows"] = rows;
  return payload;
}

}  // namespace

RunConfig parse_run_config(const json& root) {
  if (!root.is_object()) throw ValidationError("config: expected a JSON object");
  RunConfig cfg;
  cfg.subcommand = get_str(root, "subcommand", "config", "");
  if (!kSubcommands.count(cfg.subcommand))
    fail("config.subcommand", "expected one of gen, estimate, bound, sweep, align, probe, meta");
  for (const auto& name : kSubcommands)
    if (name != cfg.subcommand && root.contains(name))
      fail("config." + name, "parameter block does not match the selected subcommand");
  cfg.params = root.contains(cfg.subcommand) ? root[cfg.subcommand] : json::object();
  if (!cfg.params.is_object()) fail("config." + cfg.subcommand, "expected an object");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      fail("config.seed", "expected an integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  cfg.out_dir = get_str(root, "out", "config", cfg.out_dir);
  cfg.emit_plots = get_bool(root, "emit_plots", "config", cfg.emit_plots);
  cfg.jobs = get_int(root, "jobs", "config", cfg.jobs);
  if (cfg.jobs < 1) fail("config.jobs", "must be >= 1");
  return cfg;
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ValidationError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (...) {
    parsed = value;  // plain string
  }
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dotpos = key.find('.', start);
    const std::string part = key.substr(start, dotpos - start);
    if (part.empty()) throw ValidationError("--set key has an empty path segment: '" + key + "'");
    if (dotpos == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dotpos + 1;
  }
}

// Only what determines the computed results: output location, plot toggle
// and worker count are excluded so runs of the same experiment hash alike.
json effective_config_json(const RunConfig& cfg) {
  json root;
  root["subcommand"] = cfg.subcommand;
  root["seed"] = cfg.seed;
  root[cfg.subcommand] = cfg.params;
  return root;
}

int run(const RunConfig& cfg) {
  try {
    Artifacts art;
    art.dir = cfg.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(art.dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + cfg.out_dir + "'");

    json payload;
    if (cfg.subcommand == "gen") payload = run_gen(cfg, art);
    else if (cfg.subcommand == "estimate") payload = run_estimate(cfg, art);
    else if (cfg.subcommand == "bound") payload = run_bound(cfg, art);
    else if (cfg.subcommand == "sweep") payload = run_sweep(cfg, art);
    else if (cfg.subcommand == "align") payload = run_align(cfg, art);
    else if (cfg.subcommand == "probe") payload = run_probe(cfg, art);
    else payload = run_meta(cfg, art);

    json result;
    result["schema"] = 1;
    result["subcommand"] = cfg.subcommand;
    result["seed"] = cfg.seed;
    result["result"] = payload;
    art.write("result.json", result.dump(2) + "\n");

    json manifest;
    manifest["schema"] = 1;
    manifest["config_hash"] = fnv1a64_hex(effective_config_json(cfg).dump());
    manifest["seed"] = cfg.seed;
    std::sort(art.names.begin(), art.names.end());
    manifest["artifacts"] = art.names;
    write_text(art.dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace dab

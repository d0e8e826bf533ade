#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dabound/divergence.hpp"
#include "test_util.hpp"

using namespace dab;

namespace {

// Random threshold class over 1-d or 2-d data.
FiniteClass random_threshold_class(Rng& rng, int dim, int members) {
  FiniteClass cls;
  cls.name = "random_thresholds";
  for (int i = 0; i < members; ++i)
    cls.members.push_back(ThresholdHypothesis{rng.uniform_int(0, dim - 1), rng.uniform(-2.0, 2.0),
                                              rng.uniform() < 0.5});
  return cls;
}

UnlabeledView gaussian_blob(Rng& rng, int n, double cx, double cy) {
  UnlabeledView v;
  v.dim = 2;
  for (int i = 0; i < n; ++i) {
    v.xs.push_back(cx + rng.normal());
    v.xs.push_back(cy + rng.normal());
    v.weights.push_back(1.0 / n);
  }
  return v;
}

}  // namespace

TEST_CASE("hdh exact: identical marginals give zero") {
  Rng rng(1);
  auto ds = dabtest::random_dataset(rng, 10, 2, 2);
  auto v = unlabeled(ds);
  auto cls = random_threshold_class(rng, 2, 12);
  auto e = hdh_divergence_exact(cls, v, v);
  CHECK(e.value == 0.0);
  CHECK(e.status == DivStatus::optimal);
}

TEST_CASE("hdh exact: two-point boolean world maxes out at one") {
  auto b = dabtest::make_boolean_instance();
  auto e = hdh_divergence_exact(b.cls, unlabeled(b.inst.source), b.inst.target_unlabeled());
  CHECK(e.value == 1.0);
}

TEST_CASE("hdh exact: threshold instance enumerates to one half") {
  auto t = dabtest::make_threshold_instance();
  auto e = hdh_divergence_exact(t.cls, unlabeled(t.inst.source), t.inst.target_unlabeled());
  CHECK(e.value == doctest::Approx(0.5));
}

TEST_CASE("single-hypothesis discrepancy: exact values and dominance") {
  auto t = dabtest::make_threshold_instance();
  auto sx = unlabeled(t.inst.source);
  auto tx = t.inst.target_unlabeled();
  CHECK(single_hyp_discrepancy_exact(t.cls.members[1], t.cls, sx, sx).value == 0.0);
  CHECK(single_hyp_discrepancy_exact(t.cls.members[1], t.cls, sx, tx).value == doctest::Approx(0.5));

  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    auto s = unlabeled(dabtest::random_dataset(rng, 8, 2, 2));
    auto tt = unlabeled(dabtest::random_dataset(rng, 7, 2, 2));
    auto cls = random_threshold_class(rng, 2, 10);
    const double hdh = hdh_divergence_exact(cls, s, tt).value;
    for (const auto& h : cls.members)
      CHECK(single_hyp_discrepancy_exact(h, cls, s, tt).value <= hdh + 1e-12);
  }
}

TEST_CASE("mansour discrepancy: zero, one, and symmetry") {
  auto b = dabtest::make_boolean_instance();
  auto sx = unlabeled(b.inst.source);
  auto tx = b.inst.target_unlabeled();
  CHECK(mansour_discrepancy(b.cls, sx, sx).value == 0.0);
  CHECK(mansour_discrepancy(b.cls, sx, tx).value == 1.0);

  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = unlabeled(dabtest::random_dataset(rng, 9, 1, 2));
    auto t = unlabeled(dabtest::random_dataset(rng, 6, 1, 2));
    auto cls = random_threshold_class(rng, 1, 8);
    CHECK(mansour_discrepancy(cls, s, t).value ==
          doctest::Approx(mansour_discrepancy(cls, t, s).value).epsilon(1e-12));
  }
}

TEST_CASE("lambda exact: witnesses and values") {
  auto t = dabtest::make_threshold_instance();
  auto lam = lambda_estimate_exact(t.cls, t.inst.source, t.inst.target_eval());
  CHECK(lam.value == 0.0);
  CHECK(lam.witness_index == 1);  // 1[x>=0]

  // constants-only class on crossed deltas
  FiniteClass consts{"constants", {ConstantHypothesis{0}, ConstantHypothesis{1}}};
  auto src = dabtest::make_dataset({{0.0}}, {0}, {1.0}, 2);
  auto tgt = dabtest::make_dataset({{1.0}}, {1}, {1.0}, 2);
  TransferInstance crossed(src, tgt, ShiftKind::covariate, 0);
  CHECK(lambda_estimate_exact(consts, crossed.source, crossed.target_eval()).value == 1.0);

  // identical domains with a realizable member
  TransferInstance same(t.inst.source, t.inst.source, ShiftKind::covariate, 0);
  CHECK(lambda_estimate_exact(t.cls, same.source, same.target_eval()).value == 0.0);
}

TEST_CASE("lambda trained: upper bound with witness") {
  Rng rng(13);
  auto src = dabtest::random_dataset(rng, 14, 1, 2);
  MlpArch arch{{1, 6, 2}, OutputMode::hard};
  OptConfig opt;
  opt.steps = 120;
  opt.lr = 0.4;
  auto lam = lambda_estimate_trained(arch, src, src, opt, 2, 3);
  CHECK(lam.status == DivStatus::upper_bound);
  REQUIRE(lam.witness.has_value());
  Hypothesis w = *lam.witness;
  CHECK(lam.value == doctest::Approx(risk01(w, src) * 2.0));
}

TEST_CASE("adversarial hdh: no signal on identical views") {
  Rng rng(8);
  auto v = gaussian_blob(rng, 40, 0.0, 0.0);
  AdversarialConfig cfg;
  cfg.arch = MlpArch{{2, 8, 1}, OutputMode::hard};
  cfg.blocks = 10;
  auto e = hdh_divergence_adversarial(cfg, v, v, 17);
  CHECK(e.value <= 0.05);
  CHECK(e.status == DivStatus::lower_bound);
}

TEST_CASE("adversarial hdh: far-separated blobs are fully discriminable") {
  Rng rng(9);
  auto s = gaussian_blob(rng, 200, 0.0, 0.0);
  auto t = gaussian_blob(rng, 200, 10.0, 0.0);
  AdversarialConfig cfg;
  cfg.arch = MlpArch{{2, 8, 1}, OutputMode::hard};
  cfg.blocks = 40;
  auto e = hdh_divergence_adversarial(cfg, s, t, 23);
  CHECK(e.value >= 0.9);
}

TEST_CASE("adversarial never exceeds exact on threshold-expressible instances") {
  Rng rng(10);
  for (int rep = 0; rep < 3; ++rep) {
    // 1-d instances; linear discriminators realize exactly the thresholds
    auto mk = [&](double center) {
      UnlabeledView v;
      v.dim = 1;
      for (int i = 0; i < 30; ++i) {
        v.xs.push_back(center + rng.normal());
        v.weights.push_back(1.0 / 30.0);
      }
      return v;
    };
    auto s = mk(0.0), t = mk(1.5);
    // fine threshold grid containing every labeling a linear rule can produce
    FiniteClass cls;
    cls.name = "fine_grid";
    std::vector<double> all(s.xs);
    all.insert(all.end(), t.xs.begin(), t.xs.end());
    std::sort(all.begin(), all.end());
    cls.members.push_back(ConstantHypothesis{0});
    cls.members.push_back(ConstantHypothesis{1});
    for (double x : all) {
      cls.members.push_back(ThresholdHypothesis{0, x, false});
      cls.members.push_back(ThresholdHypothesis{0, x, true});
    }
    const double exact = hdh_divergence_exact(cls, s, t).value;
    AdversarialConfig cfg;
    cfg.arch = MlpArch{{1, 1}, OutputMode::hard};  // pure linear: sign(wx + b)
    cfg.blocks = 20;
    const double adv = hdh_divergence_adversarial(cfg, s, t, 31).value;
    CHECK(adv <= exact + 1e-12);
  }
}

TEST_CASE("adversarial estimates are seed-deterministic") {
  Rng rng(19);
  auto s = gaussian_blob(rng, 30, 0.0, 0.0);
  auto t = gaussian_blob(rng, 30, 2.0, 0.0);
  AdversarialConfig cfg;
  cfg.arch = MlpArch{{2, 6, 1}, OutputMode::hard};
  cfg.blocks = 8;
  auto a = hdh_divergence_adversarial(cfg, s, t, 5);
  auto b = hdh_divergence_adversarial(cfg, s, t, 5);
  CHECK(a.value == b.value);
  CHECK(a.final_objective == b.final_objective);
}

TEST_CASE("nonnegativity across exact divergences") {
  Rng rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = unlabeled(dabtest::random_dataset(rng, 6, 1, 2));
    auto t = unlabeled(dabtest::random_dataset(rng, 5, 1, 2));
    auto cls = random_threshold_class(rng, 1, 6);
    CHECK(hdh_divergence_exact(cls, s, t).value >= 0.0);
    CHECK(mansour_discrepancy(cls, s, t).value >= 0.0);
    CHECK(wasserstein1_exact(s, t).value >= 0.0);
  }
}

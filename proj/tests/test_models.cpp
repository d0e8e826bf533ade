#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dabound/hypothesis.hpp"
#include "dabound/lipschitz.hpp"
#include "dabound/train.hpp"
#include "test_util.hpp"

using namespace dab;

namespace {

// Central finite differences of the batch loss, the independent oracle for
// the reverse-mode gradients.
std::vector<double> fd_grad(const MlpArch& arch, std::vector<double> params,
                            const LabeledDataset& batch, LossKind loss, double eps) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + eps;
    const double up = mlp_loss(arch, params, batch, loss);
    params[i] = keep - eps;
    const double dn = mlp_loss(arch, params, batch, loss);
    params[i] = keep;
    g[i] = (up - dn) / (2.0 * eps);
  }
  return g;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += std::max(a[i] * a[i], b[i] * b[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace

TEST_CASE("risk01: perfect, constant, and the two-point enumeration") {
  auto t = dabtest::make_threshold_instance();
  const auto& S = t.inst.source;

  // perfect hypothesis on its own labels
  CHECK(risk01(t.cls.members[1], S) == 0.0);
  // constant 0 on balanced binary data
  CHECK(risk01(Hypothesis{ConstantHypothesis{0}}, S) == 0.5);
  // h3 = 1[x>=2] is (0,0) on the support: wrong only at +1
  CHECK(risk01(t.cls.members[2], S) == 0.5);
}

TEST_CASE("disagreement: identity, enumeration, complement") {
  auto t = dabtest::make_threshold_instance();
  const auto& S = t.inst.source;
  CHECK(disagreement(t.cls.members[1], t.cls.members[1], S) == 0.0);
  CHECK(disagreement(t.cls.members[1], t.cls.members[2], S) == 0.5);
  Hypothesis h = ThresholdHypothesis{0, 0.0, false};
  Hypothesis hc = ThresholdHypothesis{0, 0.0, true};
  CHECK(disagreement(h, hc, S) == 1.0);
  // complement risks add to one on binary data
  CHECK(risk01(h, S) + risk01(hc, S) == doctest::Approx(1.0));
}

TEST_CASE("triangle-like property on random triples") {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    auto ds = dabtest::random_dataset(rng, 12, 2, 2);
    auto mk = [&]() {
      return Hypothesis{ThresholdHypothesis{rng.uniform_int(0, 1), rng.uniform(-2, 2),
                                            rng.uniform() < 0.5}};
    };
    Hypothesis h = mk(), hp = mk();
    CHECK(risk01(h, ds) <= disagreement(h, hp, ds) + risk01(hp, ds) + 1e-12);
  }
}

TEST_CASE("risk_l1: exact fit, midpoint constant, identity ramp") {
  auto ds = dabtest::make_dataset({{0.0}, {1.0}}, {0, 1});
  Hypothesis ramp = LinearHypothesis{{1.0}, 0.0};  // h(x) = clamp(x)
  CHECK(risk_l1(ramp, ds) == 0.0);
  Hypothesis mid = LinearHypothesis{{0.0}, 0.5};
  CHECK(risk_l1(mid, ds) == 0.5);
  auto multi = dabtest::make_dataset({{0.0}}, {0}, {1.0}, 3);
  CHECK_THROWS_AS(risk_l1(ramp, multi), ValidationError);
}

TEST_CASE("gradient is zero at an exact-fit L1 minimum") {
  // saturated ramp fits {0 -> 0, 1 -> 1} with slack around the clamp
  MlpArch arch{{1, 1}, OutputMode::l1};
  std::vector<double> params = {3.0, -1.0};  // z = 3x - 1: z(0) = -1 <= 0, z(1) = 2 >= 1
  auto ds = dabtest::make_dataset({{0.0}, {1.0}}, {0, 1});
  auto g = mlp_grad(arch, params, ds, LossKind::l1);
  for (double v : g) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("autodiff matches central finite differences") {
  Rng rng(77);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = rng.uniform_int(1, 4);
    const int classes = rng.uniform_int(2, 4);
    MlpArch arch;
    arch.layers = {dim, rng.uniform_int(2, 6), classes};
    if (rng.uniform() < 0.3) arch.layers.insert(arch.layers.begin() + 1, rng.uniform_int(2, 5));
    arch.mode = OutputMode::hard;
    auto params = init_params(arch, rng.next_u64());
    auto batch = dabtest::random_dataset(rng, rng.uniform_int(2, 8), dim, classes);

    auto ad = mlp_grad(arch, params, batch, LossKind::cross_entropy);
    auto fd = fd_grad(arch, params, batch, LossKind::cross_entropy, 1e-5);
    CHECK(rel_err(ad, fd) < 1e-4);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("autodiff matches finite differences for the l1 loss away from kinks") {
  // the l1 loss is piecewise linear; central differences are a valid oracle
  // only when no clamp boundary or exact fit sits within the probe radius
  Rng rng(911);
  int checked = 0;
  while (checked < 40) {
    MlpArch arch{{2, rng.uniform_int(2, 5), 1}, OutputMode::l1};
    auto params = init_params(arch, rng.next_u64());
    auto batch = dabtest::random_dataset(rng, rng.uniform_int(2, 6), 2, 2);
    bool near_kink = false;
    std::vector<double> z;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      mlp_forward(arch, params, batch.point(i), z);
      const double s = std::clamp(z[0], 0.0, 1.0);
      if (std::abs(z[0]) < 1e-3 || std::abs(z[0] - 1.0) < 1e-3 ||
          std::abs(s - batch.labels[i]) < 1e-3)
        near_kink = true;
    }
    if (near_kink) continue;
    auto ad = mlp_grad(arch, params, batch, LossKind::l1);
    auto fd = fd_grad(arch, params, batch, LossKind::l1, 1e-6);
    CHECK(rel_err(ad, fd) < 1e-4);
    ++checked;
  }
}

TEST_CASE("gradient linearity under loss scaling") {
  // scaling every batch weight by c scales nothing (normalized), but
  // duplicating the loss via output-grad scaling does; check via the raw hook
  Rng rng(5);
  MlpArch arch{{2, 3, 2}, OutputMode::hard};
  auto params = init_params(arch, 9);
  auto batch = dabtest::random_dataset(rng, 5, 2, 2);
  auto g1 = mlp_grad(arch, params, batch, LossKind::cross_entropy);

  auto base = make_loss_fn(LossKind::cross_entropy, batch.labels);
  const double c = 3.5;
  auto scaled = [&](std::size_t i, std::span<const double> z, std::span<double> dz) {
    const double l = base(i, z, dz);
    for (auto& v : dz) v *= c;
    return c * l;
  };
  auto g2 = mlp_backprop(arch, params, batch.xs, batch.weights, batch.size(), scaled);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(g2.param_grad[i] == doctest::Approx(c * g1[i]).epsilon(1e-12));
}

TEST_CASE("train_supervised: separable data reaches zero risk") {
  Rng rng(123);
  std::vector<std::vector<double>> pts;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    const int y = i % 2;
    pts.push_back({(y == 0 ? -1.0 : 1.0) + 0.1 * rng.normal(), 0.1 * rng.normal()});
    labels.push_back(y);
  }
  auto ds = dabtest::make_dataset(pts, labels);
  MlpArch arch{{2, 8, 2}, OutputMode::hard};
  OptConfig opt;
  opt.steps = 300;
  opt.lr = 0.5;
  auto h = train_supervised(arch, ds, opt, 1);
  CHECK(risk01(Hypothesis{h}, ds) == 0.0);
}

TEST_CASE("train_supervised: zero steps and zero step size are identities") {
  auto ds = dabtest::make_dataset({{0.0}, {1.0}}, {0, 1});
  MlpArch arch{{1, 4, 2}, OutputMode::hard};
  OptConfig opt;
  opt.steps = 0;
  auto h0 = train_supervised(arch, ds, opt, 7);
  CHECK(h0.params == init_params(arch, derive_seed(7, 0x1417)));

  opt.steps = 50;
  opt.lr = 0.0;
  auto h1 = train_supervised(arch, ds, opt, 7);
  CHECK(h1.params == h0.params);
}

TEST_CASE("train_supervised is seed-reproducible") {
  Rng rng(2);
  auto ds = dabtest::random_dataset(rng, 16, 2, 3);
  MlpArch arch{{2, 6, 3}, OutputMode::hard};
  OptConfig opt;
  opt.steps = 80;
  opt.lr = 0.3;
  opt.batch = 4;  // exercise the minibatch path
  auto a = train_supervised(arch, ds, opt, 55);
  auto b = train_supervised(arch, ds, opt, 55);
  CHECK(a.params == b.params);
}

TEST_CASE("spectral certificates: handworked values") {
  // single linear layer (3,4): spectral norm is the euclidean norm 5
  MlpArch arch{{2, 1}, OutputMode::l1};
  MlpHypothesis h{arch, {3.0, 4.0, 0.0}};
  auto cert = lipschitz_bound(h);
  CHECK(cert.k == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(cert.per_layer.size() == 1);

  // identity layers give K = 1
  MlpArch arch2{{2, 2, 2}, OutputMode::hard};
  std::vector<double> params(arch2.param_count(), 0.0);
  params[0] = 1.0;
  params[3] = 1.0;  // layer 0 identity
  const int off = arch2.layer_offset(1);
  params[off] = 1.0;
  params[off + 3] = 1.0;
  auto cert2 = lipschitz_bound(MlpHypothesis{arch2, params});
  CHECK(cert2.k == doctest::Approx(1.0).epsilon(1e-9));

  // zero weights
  auto cert3 = lipschitz_bound(MlpHypothesis{arch2, std::vector<double>(arch2.param_count(), 0.0)});
  CHECK(cert3.k == 0.0);

  // K equals the per-layer product
  double prod = 1.0;
  for (double s : cert2.per_layer) prod *= s;
  CHECK(std::abs(cert2.k - prod) < 1e-9);
}

TEST_CASE("project_lipschitz: rescale, no-op, certified pairs") {
  MlpArch arch{{2, 1}, OutputMode::l1};
  MlpHypothesis h{arch, {3.0, 4.0, 0.5}};
  auto proj = project_lipschitz(h, 1.0);
  CHECK(proj.params[0] == doctest::Approx(0.6));
  CHECK(proj.params[1] == doctest::Approx(0.8));
  CHECK(proj.params[2] == 0.5);  // bias untouched
  CHECK(lipschitz_bound(proj).k <= 1.0 + 1e-9);

  auto same = project_lipschitz(h, 100.0);
  CHECK(same.params == h.params);

  // projected nets satisfy the metric bound on random pairs
  Rng rng(17);
  MlpArch arch2{{3, 6, 1}, OutputMode::l1};
  MlpHypothesis big{arch2, init_params(arch2, 3)};
  for (double& p : big.params) p *= 4.0;
  const double k_target = 2.0;
  auto hp = project_lipschitz(big, k_target);
  CHECK(lipschitz_bound(hp).k <= k_target + 1e-9);
  Hypothesis hv = hp;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> x(3), y(3);
    for (int d = 0; d < 3; ++d) {
      x[d] = rng.uniform(-3, 3);
      y[d] = rng.uniform(-3, 3);
    }
    const double dz = std::abs(predict_score(hv, x) - predict_score(hv, y));
    CHECK(dz <= (k_target + 1e-6) * euclidean(x, y));
  }
}

TEST_CASE("hypothesis json round trip") {
  MlpArch arch{{2, 4, 1}, OutputMode::l1};
  MlpHypothesis h{arch, init_params(arch, 11)};
  auto back = hypothesis_from_json(hypothesis_to_json(h));
  CHECK(back.arch.layers == h.arch.layers);
  CHECK(back.arch.mode == h.arch.mode);
  CHECK(back.params == h.params);
}

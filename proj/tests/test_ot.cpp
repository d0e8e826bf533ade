#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dabound/ot.hpp"
#include "dabound/rng.hpp"
#include "test_util.hpp"

using namespace dab;

namespace {

UnlabeledView make_view(const std::vector<std::vector<double>>& pts, std::vector<double> w = {}) {
  UnlabeledView v;
  v.dim = static_cast<int>(pts[0].size());
  for (const auto& p : pts) v.xs.insert(v.xs.end(), p.begin(), p.end());
  if (w.empty()) w.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
  v.weights = std::move(w);
  return v;
}

UnlabeledView random_view(Rng& rng, int n, int dim, bool uniform) {
  UnlabeledView v;
  v.dim = dim;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) v.xs.push_back(rng.uniform(-3.0, 3.0));
    double w = uniform ? 1.0 : rng.uniform(0.05, 1.0);
    v.weights.push_back(w);
    total += w;
  }
  for (double& w : v.weights) w /= total;
  return v;
}

// Independent oracle for uniform equal-size measures: minimum over
// assignments of the mean pairwise distance.
double permutation_oracle(const UnlabeledView& a, const UnlabeledView& b) {
  const int n = static_cast<int>(a.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += euclidean(a.point(i), b.point(perm[i]));
    best = std::min(best, c / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("exact w1: identity of indiscernibles") {
  Rng rng(3);
  auto v = random_view(rng, 9, 2, false);
  CHECK(wasserstein1_exact_cost(v, v).cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact w1: two-point matchings") {
  auto a = make_view({{0.0}, {1.0}});
  auto b = make_view({{0.0}, {2.0}});
  CHECK(wasserstein1_exact_cost(a, b).cost == doctest::Approx(0.5).epsilon(1e-9));

  auto d1 = make_view({{0.0, 0.0}});
  auto d2 = make_view({{3.0, 4.0}});
  CHECK(wasserstein1_exact_cost(d1, d2).cost == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("exact w1 equals the permutation oracle on small uniform measures") {
  Rng rng(41);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = rng.uniform_int(1, 6);
    const int dim = rng.uniform_int(1, 3);
    auto a = random_view(rng, n, dim, true);
    auto b = random_view(rng, n, dim, true);
    const double oracle = permutation_oracle(a, b);
    const double solver = wasserstein1_exact_cost(a, b).cost;
    CHECK(std::abs(solver - oracle) < 1e-9);
  }
}

TEST_CASE("exact w1 metric axioms on random weighted triples") {
  Rng rng(42);
  for (int rep = 0; rep < 40; ++rep) {
    const int dim = rng.uniform_int(1, 3);
    auto a = random_view(rng, rng.uniform_int(2, 10), dim, false);
    auto b = random_view(rng, rng.uniform_int(2, 10), dim, false);
    auto c = random_view(rng, rng.uniform_int(2, 10), dim, false);
    const double ab = wasserstein1_exact_cost(a, b).cost;
    const double ba = wasserstein1_exact_cost(b, a).cost;
    const double ac = wasserstein1_exact_cost(a, c).cost;
    const double cb = wasserstein1_exact_cost(c, b).cost;
    CHECK(std::abs(ab - ba) < 1e-12);
    CHECK(ab >= 0.0);
    CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("sinkhorn approaches zero on identical views") {
  Rng rng(5);
  auto v = random_view(rng, 12, 2, false);
  SinkhornOptions opts;
  opts.reg = 1e-3;
  auto r = sinkhorn_w1(v, v, opts);
  CHECK(r.cost <= 1e-3);
}

TEST_CASE("sinkhorn tracks the exact value at small regularization") {
  auto a = make_view({{0.0}, {1.0}});
  auto b = make_view({{0.0}, {2.0}});
  SinkhornOptions opts;
  opts.reg = 1e-3;
  auto r = sinkhorn_w1(a, b, opts);
  CHECK(std::abs(r.cost - 0.5) < 1e-2);
  CHECK(r.converged);
  CHECK(r.marginal_violation <= opts.tol);
}

TEST_CASE("sinkhorn stays within 5 percent of exact on random instances") {
  Rng rng(71);
  for (int rep = 0; rep < 5; ++rep) {
    auto a = random_view(rng, 24, 2, false);
    auto b = random_view(rng, 20, 2, false);
    // separate the clouds so the exact cost is well away from zero
    for (std::size_t i = 0; i < b.size(); ++i) b.xs[i * 2] += 3.0;
    const double exact = wasserstein1_exact_cost(a, b).cost;
    SinkhornOptions opts;
    opts.reg = 1e-3;
    auto r = sinkhorn_w1(a, b, opts);
    CHECK(std::abs(r.cost - exact) <= 0.05 * exact + 1e-3);
    CHECK(r.cost >= exact - 1e-9);  // rounded plan is feasible
  }
}

TEST_CASE("exact w1 handles degenerate supports") {
  // duplicated points and zero-weight entries
  UnlabeledView a;
  a.dim = 1;
  a.xs = {0.0, 0.0, 1.0, 5.0};
  a.weights = {0.25, 0.25, 0.5, 0.0};
  auto b = make_view({{0.0}, {1.0}});
  CHECK(wasserstein1_exact_cost(a, b).cost == doctest::Approx(0.0).epsilon(1e-12));

  // collinear masses, exact hand value: move 0.25 from 0 to 2 (cost 0.5)
  auto c = make_view({{0.0}, {1.0}}, {0.75, 0.25});
  auto d = make_view({{0.0}, {1.0}, {2.0}}, {0.5, 0.25, 0.25});
  CHECK(wasserstein1_exact_cost(c, d).cost == doctest::Approx(0.5).epsilon(1e-9));

  // larger instance: solver agrees with the sinkhorn upper bound from above
  Rng rng(6);
  auto big_a = random_view(rng, 200, 3, false);
  auto big_b = random_view(rng, 180, 3, false);
  const double exact = wasserstein1_exact_cost(big_a, big_b).cost;
  SinkhornOptions opts;
  opts.reg = 0.01;
  auto s = sinkhorn_w1(big_a, big_b, opts);
  CHECK(s.cost >= exact - 1e-9);
  CHECK(s.cost <= exact + 0.2 * exact + 0.05);
}

TEST_CASE("sinkhorn reports non-convergence without throwing") {
  auto a = make_view({{0.0}, {1.0}});
  auto b = make_view({{0.5}, {2.0}});
  SinkhornOptions opts;
  opts.reg = 1e-3;
  opts.max_iter = 3;
  opts.eps_scaling = false;
  auto r = sinkhorn_w1(a, b, opts);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.cost));
}

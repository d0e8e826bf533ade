#include "dabound/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace dab {

namespace {

constexpr double kCostScale = 1e9;
constexpr double kMassEps = 1e-15;

struct Side {
  std::vector<double> xs;
  std::vector<double> w;
  int dim = 0;
  std::size_t size() const { return w.size(); }
  VecView point(std::size_t i) const { return {xs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)}; }
};

// Drop zero-weight points and renormalize to total mass exactly computed.
Side condense(const UnlabeledView& v) {
  Side s;
  s.dim = v.dim;
  double total = 0.0;
  for (double w : v.weights) total += w;
  if (!(total > 0.0)) throw ValidationError("view has zero total mass");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.weights[i] <= 0.0) continue;
    auto p = v.point(i);
    s.xs.insert(s.xs.end(), p.begin(), p.end());
    s.w.push_back(v.weights[i] / total);
  }
  return s;
}

}  // namespace

ExactOtResult wasserstein1_exact_cost(const UnlabeledView& av, const UnlabeledView& bv) {
  if (av.dim != bv.dim) throw ValidationError("views have different dimensions");
  Side a = condense(av), b = condense(bv);
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());

  // Upward-quantized integer costs (see header's precision contract).
  std::vector<std::int64_t> cost(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost[static_cast<std::size_t>(i) * m + j] =
          static_cast<std::int64_t>(std::ceil(euclidean(a.point(i), b.point(j)) * kCostScale));

  std::vector<double> supply = a.w, demand = b.w;
  std::vector<double> flow(static_cast<std::size_t>(n) * m, 0.0);
  std::vector<std::int64_t> pot(n + m, 0);  // node potentials
  const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

  std::vector<std::int64_t> dist(n + m);
  std::vector<int> prev(n + m);  // predecessor node (-1 for roots)
  std::vector<char> done(n + m);

  int augmentations = 0;
  const int max_aug = 16 * (n + m) + 256;
  double supply_left = 0.0;
  for (double s : supply) supply_left += s;

  while (supply_left > kMassEps) {
    if (++augmentations > max_aug) throw NumericError("transport solver exceeded augmentation budget");

    // Dijkstra over the residual bipartite graph with reduced costs.
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    using Item = std::pair<std::int64_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    for (int i = 0; i < n; ++i)
      if (supply[i] > kMassEps) {
        dist[i] = 0;
        pq.emplace(0, i);
      }
    int sink = -1;
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (done[v] || d > dist[v]) continue;
      done[v] = 1;
      if (v >= n && demand[v - n] > kMassEps) {
        sink = v;
        break;
      }
      if (v < n) {
        const std::int64_t base = d + pot[v];
        const std::int64_t* crow = cost.data() + static_cast<std::size_t>(v) * m;
        for (int j = 0; j < m; ++j) {
          const int u = n + j;
          if (done[u]) continue;
          const std::int64_t nd = base + crow[j] - pot[u];
          if (nd < dist[u]) {
            dist[u] = nd;
            prev[u] = v;
            pq.emplace(nd, u);
          }
        }
      } else {
        const int j = v - n;
        for (int i = 0; i < n; ++i) {
          if (done[i] || flow[static_cast<std::size_t>(i) * m + j] <= 0.0) continue;
          // reverse arc j -> i, reduced cost -c_ij + pot[j] - pot[i]
          const std::int64_t rc = -cost[static_cast<std::size_t>(i) * m + j] + pot[v] - pot[i];
          const std::int64_t cand = d + rc;
          if (cand < dist[i]) {
            dist[i] = cand;
            prev[i] = v;
            pq.emplace(cand, i);
          }
        }
      }
    }
    if (sink < 0) throw NumericError("transport solver found no augmenting path");

    // Johnson-style potential update; unreached nodes advance by the sink
    // distance so reduced costs stay nonnegative.
    const std::int64_t dmax = dist[sink];
    for (int v = 0; v < n + m; ++v)
      pot[v] += dist[v] < kInf ? std::min(dist[v], dmax) : dmax;

    // Trace path and find bottleneck.
    double delta = demand[sink - n];
    for (int v = sink; prev[v] != -1; v = prev[v]) {
      const int p = prev[v];
      if (v >= n) {
        // forward arc p -> v: uncapacitated
      } else {
        // reverse arc p(sink-side) -> v(source-side): capacity = flow[v][p-n]
        delta = std::min(delta, flow[static_cast<std::size_t>(v) * m + (p - n)]);
      }
    }
    {
      int root = sink;
      while (prev[root] != -1) root = prev[root];
      delta = std::min(delta, supply[root]);

      for (int v = sink; prev[v] != -1; v = prev[v]) {
        const int p = prev[v];
        if (v >= n)
          flow[static_cast<std::size_t>(p) * m + (v - n)] += delta;
        else
          flow[static_cast<std::size_t>(v) * m + (p - n)] -= delta;
      }
      supply[root] -= delta;
      if (supply[root] < kMassEps) supply[root] = 0.0;
      demand[sink - n] -= delta;
      if (demand[sink - n] < kMassEps) demand[sink - n] = 0.0;
      supply_left = 0.0;
      for (double s : supply) supply_left += s;
    }
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double f = flow[static_cast<std::size_t>(i) * m + j];
      if (f > 0.0) total += f * (static_cast<double>(cost[static_cast<std::size_t>(i) * m + j]) / kCostScale);
    }
  return ExactOtResult{total, augmentations};
}

namespace {

double lse(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

SinkhornResult sinkhorn_w1(const UnlabeledView& av, const UnlabeledView& bv, const SinkhornOptions& opts) {
  if (av.dim != bv.dim) throw ValidationError("views have different dimensions");
  if (!(opts.reg > 0.0)) throw ValidationError("sinkhorn reg must be positive");
  Side a = condense(av), b = condense(bv);
  const std::size_t n = a.size(), m = b.size();

  std::vector<double> C(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) C[i * m + j] = euclidean(a.point(i), b.point(j));

  std::vector<double> loga(n), logb(m);
  for (std::size_t i = 0; i < n; ++i) loga[i] = std::log(a.w[i]);
  for (std::size_t j = 0; j < m; ++j) logb[j] = std::log(b.w[j]);

  std::vector<double> f(n, 0.0), g(m, 0.0);
  std::vector<double> buf(std::max(n, m));

  auto half_update = [&](double reg) {
    // f_i = -reg * LSE_j(log b_j + (g_j - C_ij)/reg)
    for (std::size_t i = 0; i < n; ++i) {
      buf.resize(m);
      for (std::size_t j = 0; j < m; ++j) buf[j] = logb[j] + (g[j] - C[i * m + j]) / reg;
      f[i] = -reg * lse(buf);
    }
    for (std::size_t j = 0; j < m; ++j) {
      buf.resize(n);
      for (std::size_t i = 0; i < n; ++i) buf[i] = loga[i] + (f[i] - C[i * m + j]) / reg;
      g[j] = -reg * lse(buf);
    }
  };

  auto violation = [&](double reg) {
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        row += std::exp(loga[i] + logb[j] + (f[i] + g[j] - C[i * m + j]) / reg);
      viol += std::abs(row - a.w[i]);
    }
    return viol;
  };

  SinkhornResult res;
  int iter = 0;
  if (opts.eps_scaling && opts.reg < 1.0) {
    double reg = 1.0;
    while (reg > opts.reg * 1.0000001) {
      for (int k = 0; k < 40 && iter < opts.max_iter; ++k, ++iter) half_update(reg);
      reg = std::max(opts.reg, reg * 0.5);
    }
  }
  double viol = std::numeric_limits<double>::infinity();
  while (iter < opts.max_iter) {
    half_update(opts.reg);
    ++iter;
    if (iter % 10 == 0 || iter == opts.max_iter) {
      viol = violation(opts.reg);
      if (viol <= opts.tol) break;
    }
  }
  if (!std::isfinite(viol)) viol = violation(opts.reg);
  res.iterations = iter;
  res.marginal_violation = viol;
  res.converged = viol <= opts.tol;

  // Round the plan onto the transportation polytope; the rounded plan is
  // feasible, so its cost upper-bounds the exact optimum.
  std::vector<double> P(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      P[i * m + j] = std::exp(loga[i] + logb[j] + (f[i] + g[j] - C[i * m + j]) / opts.reg);
  std::vector<double> rowsum(n, 0.0), colsum(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) rowsum[i] += P[i * m + j];
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = rowsum[i] > a.w[i] ? a.w[i] / rowsum[i] : 1.0;
    for (std::size_t j = 0; j < m; ++j) P[i * m + j] *= scale;
  }
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) colsum[j] += P[i * m + j];
  for (std::size_t j = 0; j < m; ++j) {
    const double scale = colsum[j] > b.w[j] ? b.w[j] / colsum[j] : 1.0;
    for (std::size_t i = 0; i < n; ++i) P[i * m + j] *= scale;
  }
  std::vector<double> erra(n, 0.0), errb(m, 0.0);
  double erra_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) r += P[i * m + j];
    erra[i] = a.w[i] - r;
    erra_total += std::max(0.0, erra[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += P[i * m + j];
    errb[j] = b.w[j] - c;
  }
  if (erra_total > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (erra[i] <= 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (errb[j] <= 0.0) continue;
        P[i * m + j] += erra[i] * errb[j] / erra_total;
      }
    }
  }
  double costv = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) costv += P[i * m + j] * C[i * m + j];
  res.cost = costv;
  return res;
}

}  // namespace dab

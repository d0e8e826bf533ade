#include "dabound/lipschitz.hpp"

#include <cmath>

#include "dabound/rng.hpp"

namespace dab {

namespace {
constexpr int kPowerIterations = 50;
constexpr double kPowerTol = 1e-10;
constexpr std::uint64_t kPowerSeedBase = 0x5eed5eedull;
}  // namespace

double spectral_norm(std::span<const double> w, int rows, int cols, int layer_index) {
  Rng rng(derive_seed(kPowerSeedBase, static_cast<std::uint64_t>(layer_index)));
  std::vector<double> v(cols), u(rows);
  double vnorm = 0.0;
  for (int c = 0; c < cols; ++c) {
    v[c] = rng.normal();
    vnorm += v[c] * v[c];
  }
  vnorm = std::sqrt(vnorm);
  if (vnorm == 0.0) return 0.0;
  for (double& x : v) x /= vnorm;

  double sigma = 0.0;
  for (int it = 0; it < kPowerIterations; ++it) {
    // u = W v
    double unorm = 0.0;
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      const double* row = w.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) s += row[c] * v[c];
      u[r] = s;
      unorm += s * s;
    }
    unorm = std::sqrt(unorm);
    if (unorm == 0.0) return 0.0;
    for (double& x : u) x /= unorm;
    // v = W^T u
    double vn = 0.0;
    for (int c = 0; c < cols; ++c) v[c] = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double* row = w.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) v[c] += row[c] * u[r];
    }
    for (int c = 0; c < cols; ++c) vn += v[c] * v[c];
    vn = std::sqrt(vn);
    if (vn == 0.0) return 0.0;
    for (double& x : v) x /= vn;
    if (std::abs(vn - sigma) <= kPowerTol * std::max(1.0, vn)) {
      sigma = vn;
      break;
    }
    sigma = vn;
  }
  return sigma;
}

LipschitzCertificate lipschitz_bound(const MlpHypothesis& h) {
  LipschitzCertificate cert;
  cert.k = 1.0;
  for (int l = 0; l < h.arch.num_layers(); ++l) {
    const int in = h.arch.layers[l], out = h.arch.layers[l + 1];
    std::span<const double> w{h.params.data() + h.arch.layer_offset(l),
                              static_cast<std::size_t>(out * in)};
    double s = spectral_norm(w, out, in, l);
    cert.per_layer.push_back(s);
    cert.k *= s;
  }
  return cert;
}

LipschitzCertificate lipschitz_bound(const LinearHypothesis& h) {
  LipschitzCertificate cert;
  double s = std::sqrt(dot(h.w, h.w));
  cert.per_layer.push_back(s);
  cert.k = s;
  return cert;
}

LipschitzCertificate lipschitz_bound(const Hypothesis& h) {
  if (const auto* m = std::get_if<MlpHypothesis>(&h)) return lipschitz_bound(*m);
  if (const auto* l = std::get_if<LinearHypothesis>(&h)) return lipschitz_bound(*l);
  throw ValidationError("lipschitz_bound requires a parametric hypothesis");
}

void project_params_lipschitz(const MlpArch& arch, std::vector<double>& params, double k_target) {
  if (!(k_target > 0.0)) throw ValidationError("k_target must be positive");
  const int L = arch.num_layers();
  const double per_layer = std::pow(k_target, 1.0 / static_cast<double>(L));
  for (int l = 0; l < L; ++l) {
    const int in = arch.layers[l], out = arch.layers[l + 1];
    double* w = params.data() + arch.layer_offset(l);
    double s = spectral_norm({w, static_cast<std::size_t>(out * in)}, out, in, l);
    if (s > per_layer) {
      const double scale = per_layer / s;
      for (int i = 0; i < out * in; ++i) w[i] *= scale;
    }
  }
}

MlpHypothesis project_lipschitz(const MlpHypothesis& h, double k_target) {
  if (!(k_target > 0.0)) throw ValidationError("k_target must be positive");
  if (lipschitz_bound(h).k <= k_target) return h;
  MlpHypothesis out = h;
  project_params_lipschitz(out.arch, out.params, k_target);
  return out;
}

LinearHypothesis project_lipschitz(const LinearHypothesis& h, double k_target) {
  if (!(k_target > 0.0)) throw ValidationError("k_target must be positive");
  LinearHypothesis out = h;
  double s = std::sqrt(dot(h.w, h.w));
  if (s > k_target) {
    const double scale = k_target / s;
    for (double& v : out.w) v *= scale;
  }
  return out;
}

}  // namespace dab

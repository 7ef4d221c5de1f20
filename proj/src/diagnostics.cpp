#include "sparsid/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsid/proportionate.hpp"
#include "sparsid/rng.hpp"

namespace sparsid {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

// cosine between the elementwise magnitudes of a and b; 0 with skip flag when
// either norm vanishes
double magnitude_cosine(std::span<const double> a, std::span<const double> b,
                        bool& skipped) {
  double num = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::fabs(a[i]) * std::fabs(b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    skipped = true;
    return 0.0;
  }
  skipped = false;
  return num / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

ProxyDiagnosticResult proxy_diagnostic(const ExperimentConfig& cfg, std::size_t window) {
  cfg.validate();
  const AlgorithmConfig& alg = cfg.algorithms.front();
  if (alg.kind != AlgorithmKind::Nlms)
    throw PreconditionError("proxy diagnostic requires algorithms[0] to be nlms");
  if (cfg.input.kind != SignalKind::WhiteGaussian)
    throw PreconditionError("proxy diagnostic requires white-gaussian input");
  if (cfg.shift)
    throw PreconditionError("proxy diagnostic does not support a tracking shift");
  if (window == 0) window = cfg.pad_to;

  const std::size_t L = cfg.pad_to;
  const std::size_t n = static_cast<std::size_t>(cfg.iterations);
  const ImpulseResponse h =
      pad_and_shift(cfg.channel.kind == ChannelConfig::Kind::File
                        ? load_impulse_response(cfg.channel.path)
                        : synth_sparse_channel(cfg.channel.taps, cfg.channel.active,
                                               cfg.channel.decay, cfg.channel.seed),
                    L, 0);
  const std::uint64_t rseed = cfg.seed_base;  // realization 0
  const std::vector<double> x = generate_input(cfg.input, n, derive_seed(rseed, kSeedTagInput));
  NoiseModel nm;
  nm.snr_db = cfg.snr_db;
  nm.seed = derive_seed(rseed, kSeedTagNoise);
  const DesiredSignal d = desired_signal(h, x, nm);

  // mu = 0 is the null probe: the filter never moves and every checkpoint is
  // skipped because the proxy is identically zero
  const bool frozen = alg.mu == 0.0;
  ApaParams ap;
  if (!frozen) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    ap.mu = alg.mu;
    ap.delta = alg.delta_rule.resolve(var, L);
    ap.order = 1;
  }

  RegressorBuffer buf(L, 1);
  FilterState w(L);
  UpdateScratch ws;

  ProxyDiagnosticResult res;
  res.window = window;
  std::vector<double> h_err(L);
  std::vector<double> w_start(L);
  std::vector<double> proxy(L, 0.0);
  std::vector<double> transient_cosines;

  for (std::size_t start = 0; start + window <= n; start += window) {
    ProxyCheckpoint cp;
    cp.start_iteration = start;
    cp.misalignment_start_db = misalignment_db(h, w);
    cp.transient = cp.misalignment_start_db > kTransientThresholdDb;
    w_start = w.coefficients;
    for (std::size_t l = 0; l < L; ++l) h_err[l] = h.taps[l] - w_start[l];

    for (std::size_t k = start; k < start + window; ++k) {
      buf.push(x[k]);
      if (!frozen) nlms_update(w, buf, d.noisy[k], ap, ws);
    }

    // movement proxy (w(k+N) - w(k)) / mu; defined as 0 for the frozen probe
    for (std::size_t l = 0; l < L; ++l)
      proxy[l] = frozen ? 0.0 : (w.coefficients[l] - w_start[l]) / alg.mu;

    cp.cosine = magnitude_cosine(proxy, h_err, cp.skipped);
    if (cp.skipped) ++res.skipped_count;
    if (cp.transient) ++res.transient_count;
    if (cp.transient && !cp.skipped) transient_cosines.push_back(cp.cosine);
    res.checkpoints.push_back(cp);
  }
  res.median_transient_cosine = median(std::move(transient_cosines));
  return res;
}

NecessaryConditionReport sample_necessary_condition(std::uint64_t samples,
                                                    std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, kSeedTagSampling));
  NecessaryConditionReport rep;
  rep.samples = samples;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const double h_err = rng.gaussian();
    const double g = 2.0 * rng.uniform01();
    const double x = rng.gaussian();
    const double e = rng.gaussian();
    const double mu = 0.01 + 1.99 * rng.uniform01();
    const double sigma_gx2 = 0.1 + 1.9 * rng.uniform01();
    // one scalar coefficient after the update
    const double h_err_next = h_err - mu * g * x * e / sigma_gx2;
    if (std::fabs(h_err_next) < std::fabs(h_err)) {
      ++rep.eligible;
      if (!necessary_condition_check(h_err, g, x, e, mu, sigma_gx2)) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace sparsid

#include "sparsid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "sparsid/proportionate.hpp"
#include "sparsid/rng.hpp"

namespace sparsid {

namespace {

double variance_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(v.size());
}

ImpulseResponse build_base_channel(const ChannelConfig& c) {
  if (c.kind == ChannelConfig::Kind::File) return load_impulse_response(c.path);
  return synth_sparse_channel(c.taps, c.active, c.decay, c.seed);
}

bool numeric_id(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace

const char* algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::Nlms: return "nlms";
    case AlgorithmKind::Apa: return "apa";
    case AlgorithmKind::Ipapa: return "ipapa";
    case AlgorithmKind::Dbipapa: return "dbipapa";
  }
  return "?";
}

double DeltaRule::resolve(double input_variance, std::size_t taps) const {
  if (mode == Mode::Fixed) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw ConfigError("fixed delta_rule value must be positive and finite");
    return value;
  }
  if (!(input_variance > 0.0))
    throw Error("input variance is zero; sigma-scaled delta is undefined");
  return 20.0 * input_variance / (2.0 * static_cast<double>(taps));
}

void ExperimentConfig::validate() const {
  if (pad_to == 0) throw ConfigError("experiment.pad_to must be positive");
  if (iterations == 0) throw ConfigError("experiment.iterations must be positive");
  if (realizations == 0) throw ConfigError("experiment.realizations must be positive");
  if (std::isnan(snr_db)) throw ConfigError("experiment.snr_db must be a number or \"inf\"");
  if (channel.kind == ChannelConfig::Kind::File) {
    if (channel.path.empty()) throw ConfigError("experiment.channel.path must be set");
  } else {
    if (channel.taps == 0) throw ConfigError("experiment.channel.taps must be positive");
    if (channel.active == 0 || channel.active > channel.taps)
      throw ConfigError("experiment.channel.active must lie in [1, taps]");
    if (!(channel.decay >= 0.0) || !std::isfinite(channel.decay))
      throw ConfigError("experiment.channel.decay must be non-negative");
  }
  switch (input.kind) {
    case SignalKind::WhiteGaussian:
    case SignalKind::Ar1:
      if (!(input.variance > 0.0) || !std::isfinite(input.variance))
        throw ConfigError("experiment.input.variance must be positive");
      if (input.kind == SignalKind::Ar1 && !(std::fabs(input.pole) < 1.0))
        throw ConfigError("experiment.input.pole must satisfy |pole| < 1");
      break;
    case SignalKind::PcmFile:
      if (input.path.empty()) throw ConfigError("experiment.input.path must be set");
      break;
  }
  if (shift) {
    if (shift->at_iteration == 0 || shift->at_iteration >= iterations)
      throw ConfigError("experiment.shift.at_iteration must lie in [1, iterations)");
  }
  if (algorithms.empty()) throw ConfigError("experiment.algorithms must not be empty");
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    const AlgorithmConfig& a = algorithms[i];
    const std::string key = "experiment.algorithms[" + std::to_string(i) + "]";
    // mu = 0 is allowed here only because the proxy diagnostic uses it as a
    // frozen-filter probe; runs reject it
    if (!(a.mu >= 0.0) || !std::isfinite(a.mu))
      throw ConfigError(key + ".mu must be non-negative and finite");
    if (a.order == 0) throw ConfigError(key + ".M must be positive");
    if (a.kind == AlgorithmKind::Nlms && a.order != 1)
      throw ConfigError(key + ".M must be 1 for nlms");
    if (!(a.alpha >= -1.0 && a.alpha <= 1.0))
      throw ConfigError(key + ".alpha must lie in [-1, 1]");
    if (!(a.epsilon > 0.0) || !std::isfinite(a.epsilon))
      throw ConfigError(key + ".epsilon must be positive");
    if (a.delta_rule.mode == DeltaRule::Mode::Fixed &&
        (!(a.delta_rule.value > 0.0) || !std::isfinite(a.delta_rule.value)))
      throw ConfigError(key + ".delta_rule must be \"sigma-scaled\" or a positive number");
    if (!(a.snapshot_multiplier > 0.0) || !std::isfinite(a.snapshot_multiplier))
      throw ConfigError(key + ".m must be positive and finite");
    if (a.label.empty()) throw ConfigError(key + ".label must not be empty");
    for (std::size_t j = 0; j < i; ++j)
      if (algorithms[j].label == a.label)
        throw ConfigError(key + ".label duplicates '" + a.label + "'");
  }
}

double misalignment_db(const ImpulseResponse& h, const FilterState& w) {
  if (h.taps.size() != w.taps())
    throw DimensionError("impulse response length does not match filter length");
  double hh = 0.0;
  double dd = 0.0;
  for (std::size_t i = 0; i < w.taps(); ++i) {
    const double t = h.taps[i];
    hh += t * t;
    const double d = t - w.coefficients[i];
    dd += d * d;
  }
  if (!(hh > 0.0)) throw Error("impulse response has zero norm");
  if (dd == 0.0) return -300.0;
  const double db = 10.0 * std::log10(dd / hh);  // = 20 log10(||h-w||/||h||)
  return db < -300.0 ? -300.0 : db;
}

std::optional<std::uint64_t> iterations_to_reach(const MisalignmentCurve& curve,
                                                 double threshold_db) {
  for (std::size_t k = 0; k < curve.values_db.size(); ++k)
    if (curve.values_db[k] <= threshold_db) return k;
  return std::nullopt;
}

MisalignmentCurve run_single(const ExperimentConfig& cfg, std::size_t algorithm_index,
                             std::size_t realization_index) {
  cfg.validate();
  if (algorithm_index >= cfg.algorithms.size())
    throw ConfigError("algorithm index out of range");
  if (realization_index >= cfg.realizations)
    throw ConfigError("realization index out of range");
  const AlgorithmConfig& alg = cfg.algorithms[algorithm_index];
  if (!(alg.mu > 0.0))
    throw ConfigError("experiment.algorithms[" + std::to_string(algorithm_index) +
                      "].mu must be positive for a run");
  const std::size_t L = cfg.pad_to;
  const std::size_t n = static_cast<std::size_t>(cfg.iterations);

  const ImpulseResponse base = build_base_channel(cfg.channel);
  const ImpulseResponse h_pre = pad_and_shift(base, L, 0);
  ImpulseResponse h_post;
  if (cfg.shift) h_post = pad_and_shift(base, L, cfg.shift->by_samples);

  const std::uint64_t rseed = cfg.seed_base + realization_index;
  const std::vector<double> x =
      generate_input(cfg.input, n, derive_seed(rseed, kSeedTagInput));

  // clean = h_t * x where the true response switches at the shift iteration;
  // noise variance follows the full clean stream so the SNR is well-defined
  std::vector<double> clean(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const ImpulseResponse& ht =
        (cfg.shift && k >= cfg.shift->at_iteration) ? h_post : h_pre;
    const std::size_t span = std::min(L - 1, k);
    double acc = 0.0;
    for (std::size_t i = 0; i <= span; ++i) acc += ht.taps[i] * x[k - i];
    clean[k] = acc;
  }
  std::vector<double> y;
  if (std::isinf(cfg.snr_db)) {
    y = clean;
  } else {
    const double var = variance_of(clean);
    if (var == 0.0) throw Error("clean signal has zero variance; cannot set the SNR");
    const double sigma_v = std::sqrt(var * std::pow(10.0, -cfg.snr_db / 10.0));
    RandomStream noise(derive_seed(rseed, kSeedTagNoise));
    y.resize(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = clean[k] + sigma_v * noise.gaussian();
  }

  ApaParams ap;
  ap.mu = alg.mu;
  ap.delta = alg.delta_rule.resolve(variance_of(x), L);
  ap.order = alg.order;
  GainParams gp;
  gp.alpha = alg.alpha;
  gp.epsilon = alg.epsilon;

  RegressorBuffer buf(L, alg.order);
  FilterState w(L);
  SnapshotStore snaps(w.coefficients, SnapshotStore::period_for(alg.snapshot_multiplier, L));
  UpdateScratch ws;
  std::vector<double> yvec(alg.order, 0.0);

  MisalignmentCurve curve;
  curve.algorithm = alg.label;
  curve.realization = std::to_string(realization_index);
  curve.values_db.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    buf.push(x[k]);
    for (std::size_t j = 0; j < alg.order; ++j)
      yvec[j] = (k >= j) ? y[k - j] : 0.0;  // zero prehistory, same as the buffer
    switch (alg.kind) {
      case AlgorithmKind::Nlms:
        nlms_update(w, buf, y[k], ap, ws);
        break;
      case AlgorithmKind::Apa:
        apa_update(w, buf, yvec, ap, ws);
        break;
      case AlgorithmKind::Ipapa:
        ipapa_gains(w, gp, ws.gains);
        proportionate_apa_update(w, ws.gains, buf, yvec, ap, ws);
        break;
      case AlgorithmKind::Dbipapa:
        dbipapa_step(w, buf, yvec, snaps, ap, gp, ws);
        break;
    }
    const ImpulseResponse& ht =
        (cfg.shift && k >= cfg.shift->at_iteration) ? h_post : h_pre;
    curve.values_db.push_back(misalignment_db(ht, w));
  }
  return curve;
}

MisalignmentCurve mean_of(std::span<const MisalignmentCurve> members) {
  if (members.empty()) throw Error("cannot average an empty curve set");
  const std::size_t n = members[0].values_db.size();
  for (const MisalignmentCurve& c : members) {
    if (c.values_db.size() != n) throw DimensionError("curve lengths differ");
    if (c.algorithm != members[0].algorithm)
      throw Error("cannot average curves across algorithms");
  }
  // reduce in realization-id order so the sum is independent of arrival order
  std::vector<const MisalignmentCurve*> ordered(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) ordered[i] = &members[i];
  std::sort(ordered.begin(), ordered.end(),
            [](const MisalignmentCurve* a, const MisalignmentCurve* b) {
              std::uint64_t ia = 0;
              std::uint64_t ib = 0;
              const bool na = numeric_id(a->realization, ia);
              const bool nb = numeric_id(b->realization, ib);
              if (na != nb) return na;
              if (na && nb && ia != ib) return ia < ib;
              return a->realization < b->realization;
            });
  MisalignmentCurve out;
  out.algorithm = members[0].algorithm;
  out.realization = "mean";
  out.values_db.assign(n, 0.0);
  for (const MisalignmentCurve* c : ordered)
    for (std::size_t k = 0; k < n; ++k) out.values_db[k] += c->values_db[k];
  const double scale = 1.0 / static_cast<double>(members.size());
  for (double& v : out.values_db) v *= scale;
  return out;
}

std::vector<MisalignmentCurve> run_ensemble(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  const std::size_t algos = cfg.algorithms.size();
  const std::size_t reals = static_cast<std::size_t>(cfg.realizations);
  const std::size_t tasks = algos * reals;
  std::vector<MisalignmentCurve> slots(tasks);

  unsigned workers = threads != 0 ? threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks));

  std::atomic<std::size_t> next{0};
  std::mutex fail_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (failure) return;
      }
      try {
        slots[t] = run_single(cfg, t / reals, t % reals);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<MisalignmentCurve> means;
  means.reserve(algos);
  for (std::size_t a = 0; a < algos; ++a)
    means.push_back(mean_of(std::span<const MisalignmentCurve>(&slots[a * reals], reals)));
  return means;
}

void export_csv(std::span<const MisalignmentCurve> curves, const std::string& path) {
  if (curves.empty()) throw Error("no curves to export");
  std::vector<const MisalignmentCurve*> ordered(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) ordered[i] = &curves[i];
  std::sort(ordered.begin(), ordered.end(),
            [](const MisalignmentCurve* a, const MisalignmentCurve* b) {
              if (a->algorithm != b->algorithm) return a->algorithm < b->algorithm;
              std::uint64_t ia = 0;
              std::uint64_t ib = 0;
              const bool na = numeric_id(a->realization, ia);
              const bool nb = numeric_id(b->realization, ib);
              if (na != nb) return na;  // numeric ids before "mean"
              if (na && nb && ia != ib) return ia < ib;
              return a->realization < b->realization;
            });
  std::ofstream out(path);
  if (!out) throw OutputError("cannot write '" + path + "'");
  out << "iteration,algorithm,realization,misalignment_db\n";
  char buf[40];
  for (const MisalignmentCurve* c : ordered) {
    for (std::size_t k = 0; k < c->values_db.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", c->values_db[k]);
      out << k << ',' << c->algorithm << ',' << c->realization << ',' << buf << '\n';
    }
  }
  out.flush();
  if (!out) throw OutputError("write failed for '" + path + "'");
}

}  // namespace sparsid

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsid/channels_signals.hpp"
#include "sparsid/filter_core.hpp"

namespace sparsid {

enum class AlgorithmKind { Nlms, Apa, Ipapa, Dbipapa };

const char* algorithm_name(AlgorithmKind kind);

struct DeltaRule {
  enum class Mode { Fixed, SigmaScaled } mode = Mode::SigmaScaled;
  double value = 0.0;  // only for Fixed, > 0

  // Fixed -> value; SigmaScaled -> 20 * input_variance / (2 * taps)
  double resolve(double input_variance, std::size_t taps) const;
};

struct AlgorithmConfig {
  AlgorithmKind kind = AlgorithmKind::Nlms;
  std::string label;        // CSV key; defaults to the algorithm name
  double mu = 0.15;
  std::size_t order = 1;    // projection order M
  double alpha = 0.0;
  double epsilon = 0.01;
  DeltaRule delta_rule;
  double snapshot_multiplier = 1.0;  // snapshot period = round(multiplier * taps)
};

struct ChannelConfig {
  enum class Kind { File, Synthetic } kind = Kind::Synthetic;
  std::string path;       // File
  std::size_t taps = 0;   // Synthetic
  std::size_t active = 0;
  double decay = 0.0;
  std::uint64_t seed = 0;
};

struct ShiftConfig {
  std::uint64_t at_iteration = 0;  // first iteration that sees the shifted response
  std::size_t by_samples = 0;
};

struct ExperimentConfig {
  ChannelConfig channel;
  std::size_t pad_to = 0;  // adaptive filter length; channel is zero-padded to this
  SignalSpec input;
  double snr_db = 30.0;    // +infinity = noiseless
  std::uint64_t iterations = 0;
  std::uint64_t realizations = 20;
  std::uint64_t seed_base = 0;       // realization r uses streams seeded from seed_base + r
  std::optional<ShiftConfig> shift;  // mid-run true-channel change, filter state untouched
  std::vector<AlgorithmConfig> algorithms;

  void validate() const;  // throws ConfigError naming the offending key
};

struct MisalignmentCurve {
  std::string algorithm;    // AlgorithmConfig::label
  std::string realization;  // realization index, or "mean"
  std::vector<double> values_db;
};

// 20 log10(||h - w|| / ||h||), clamped below at -300 dB
double misalignment_db(const ImpulseResponse& h, const FilterState& w);

// first index with curve value <= threshold_db
std::optional<std::uint64_t> iterations_to_reach(const MisalignmentCurve& curve,
                                                 double threshold_db);

// One (algorithm, realization) pass. Deterministic in (cfg, indices); the
// recorded value at k is the misalignment against the true response after the
// update for sample k.
MisalignmentCurve run_single(const ExperimentConfig& cfg, std::size_t algorithm_index,
                             std::size_t realization_index);

// dB-domain pointwise mean; members are reduced in realization-id order, so
// the result does not depend on the order they are passed in.
MisalignmentCurve mean_of(std::span<const MisalignmentCurve> members);

// Ensemble-mean curve per algorithm, in config order. threads = 0 picks the
// hardware count; the output is byte-identical for any thread count.
std::vector<MisalignmentCurve> run_ensemble(const ExperimentConfig& cfg,
                                            unsigned threads = 0);

// Header iteration,algorithm,realization,misalignment_db; rows ordered by
// (algorithm, realization, iteration); values carry 17 significant digits.
// Refuses an empty curve set before creating the file.
void export_csv(std::span<const MisalignmentCurve> curves, const std::string& path);

}  // namespace sparsid

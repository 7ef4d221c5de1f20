#pragma once

#include <cstdint>
#include <vector>

#include "sparsid/harness.hpp"

namespace sparsid {

// checkpoints whose starting misalignment is above this count as transient
inline constexpr double kTransientThresholdDb = -20.0;

struct ProxyCheckpoint {
  std::uint64_t start_iteration = 0;
  double misalignment_start_db = 0.0;
  double cosine = 0.0;  // between |h - w| and |w(k+N) - w(k)| / mu, elementwise magnitudes
  bool transient = false;
  bool skipped = false;  // either vector had zero norm
};

struct ProxyDiagnosticResult {
  std::size_t window = 0;
  std::vector<ProxyCheckpoint> checkpoints;
  std::size_t transient_count = 0;
  std::size_t skipped_count = 0;
  // over transient, non-skipped checkpoints; NaN when there are none
  double median_transient_cosine = 0.0;
};

// Runs algorithms[0] (must be nlms; mu = 0 freezes the filter as a null
// probe) on realization 0 and compares the per-window coefficient movement
// against the coefficient error at the window start. Requires white input and
// no tracking shift.
ProxyDiagnosticResult proxy_diagnostic(const ExperimentConfig& cfg, std::size_t window = 0);

struct NecessaryConditionReport {
  std::uint64_t samples = 0;
  std::uint64_t eligible = 0;    // draws where the error magnitude actually shrank
  std::uint64_t violations = 0;  // eligible draws where the gain bound failed
};

// Random scalar-update draws: whenever the post-update error magnitude is
// strictly smaller, the gain must satisfy necessary_condition_check. Any
// violation is a bug in the bound or the update algebra.
NecessaryConditionReport sample_necessary_condition(std::uint64_t samples, std::uint64_t seed);

}  // namespace sparsid

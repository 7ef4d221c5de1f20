#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsid/errors.hpp"

namespace sparsid {

struct ImpulseResponse {
  std::vector<double> taps;
  std::string label;
  double norm2() const;  // l2 norm of the taps
};

// ASCII file, one coefficient per line; blank lines and lines starting with
// '#' are skipped. Parse failures name the 1-based line number.
ImpulseResponse load_impulse_response(const std::string& path);

// Inverse of load_impulse_response; 17 significant digits, so a save/load
// round trip is exact.
void save_impulse_response(const ImpulseResponse& h, const std::string& path);

// Sparse response: `active` distinct positions get amplitude
// sign * exp(-decay * position) * u with u uniform on (0, 1], everything else
// stays zero. Deterministic in `seed`.
ImpulseResponse synth_sparse_channel(std::size_t taps, std::size_t active, double decay,
                                     std::uint64_t seed);

// Zero-pad to pad_to taps and delay by shift_by samples. Errors out if a
// nonzero tap would land at or past pad_to; zero taps may fall off, so the
// l2 norm is always preserved exactly.
ImpulseResponse pad_and_shift(const ImpulseResponse& h, std::size_t pad_to,
                              std::size_t shift_by);

enum class SignalKind { WhiteGaussian, Ar1, PcmFile };

struct SignalSpec {
  SignalKind kind = SignalKind::WhiteGaussian;
  double pole = 0.0;       // AR(1) pole, |pole| < 1
  double variance = 1.0;   // driving-noise variance for the synthetic kinds
  std::string path;        // PCM file
  std::size_t warmup = 1000;  // AR(1) samples discarded so the start is stationary
};

// n samples of the configured process. The seed picks the realization for the
// synthetic kinds and is ignored for PCM files.
std::vector<double> generate_input(const SignalSpec& spec, std::size_t n, std::uint64_t seed);

// Raw signed 16-bit little-endian mono, scaled to [-1, 1).
std::vector<double> pcm_load(const std::string& path);

struct NoiseModel {
  double snr_db = 30.0;  // +infinity means noiseless
  std::uint64_t seed = 0;
};

struct DesiredSignal {
  std::vector<double> noisy;  // clean + measurement noise
  std::vector<double> clean;  // convolution of h with x, zero prehistory
};

// Noise variance is set from the measured clean-signal variance so the
// realized SNR matches the request.
DesiredSignal desired_signal(const ImpulseResponse& h, std::span<const double> x,
                             const NoiseModel& noise);

}  // namespace sparsid

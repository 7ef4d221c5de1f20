#include "sparsid/channels_signals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sparsid/rng.hpp"

namespace sparsid {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double mean_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

double ImpulseResponse::norm2() const {
  double acc = 0.0;
  for (double t : taps) acc += t * t;
  return std::sqrt(acc);
}

ImpulseResponse load_impulse_response(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open impulse response '" + path + "'");
  ImpulseResponse h;
  h.label = path;
  std::string line;
  std::size_t line_no = 0;
  bool any_nonzero = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
      throw ParseError("bad coefficient at " + path + ":" + std::to_string(line_no));
    if (!std::isfinite(value))
      throw ParseError("non-finite coefficient at " + path + ":" + std::to_string(line_no));
    if (value != 0.0) any_nonzero = true;
    h.taps.push_back(value);
  }
  if (h.taps.empty()) throw ParseError("no coefficients in '" + path + "'");
  if (!any_nonzero) throw ParseError("all coefficients are zero in '" + path + "'");
  return h;
}

void save_impulse_response(const ImpulseResponse& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw OutputError("cannot write '" + path + "'");
  char buf[40];
  for (double t : h.taps) {
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    out << buf << '\n';
  }
  out.flush();
  if (!out) throw OutputError("write failed for '" + path + "'");
}

ImpulseResponse synth_sparse_channel(std::size_t taps, std::size_t active, double decay,
                                     std::uint64_t seed) {
  if (taps == 0) throw std::invalid_argument("taps must be positive");
  if (active == 0 || active > taps)
    throw std::invalid_argument("active tap count must lie in [1, taps]");
  if (!(decay >= 0.0) || !std::isfinite(decay))
    throw std::invalid_argument("decay must be non-negative and finite");

  RandomStream rng(seed);
  // partial Fisher-Yates: the first `active` entries are the chosen positions
  std::vector<std::size_t> idx(taps);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < active; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(taps - i));
    std::swap(idx[i], idx[j]);
  }

  ImpulseResponse h;
  h.taps.assign(taps, 0.0);
  for (std::size_t i = 0; i < active; ++i) {
    const std::size_t pos = idx[i];
    const double sign = (rng.next_u64() & 1u) ? 1.0 : -1.0;
    // uniform01 is never 0, so active taps are never zero
    h.taps[pos] = sign * std::exp(-decay * static_cast<double>(pos)) * rng.uniform01();
  }
  std::ostringstream label;
  label << "synthetic(taps=" << taps << ",active=" << active << ",seed=" << seed << ")";
  h.label = label.str();
  return h;
}

ImpulseResponse pad_and_shift(const ImpulseResponse& h, std::size_t pad_to,
                              std::size_t shift_by) {
  if (pad_to == 0) throw std::invalid_argument("pad_to must be positive");
  for (std::size_t i = 0; i < h.taps.size(); ++i) {
    if (h.taps[i] == 0.0) continue;
    if (i + shift_by >= pad_to)
      throw Error("shift pushes a nonzero tap at " + std::to_string(i) + " past " +
                  std::to_string(pad_to));
  }
  ImpulseResponse out;
  out.label = h.label;
  out.taps.assign(pad_to, 0.0);
  const std::size_t n = std::min(h.taps.size(), pad_to > shift_by ? pad_to - shift_by : 0);
  for (std::size_t i = 0; i < n; ++i) out.taps[i + shift_by] = h.taps[i];
  return out;
}

std::vector<double> pcm_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PCM file '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.empty()) throw ParseError("PCM file '" + path + "' is empty");
  if (bytes.size() % 2 != 0)
    throw ParseError("PCM file '" + path + "' has an odd byte count");
  std::vector<double> out(bytes.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint16_t lo = static_cast<std::uint8_t>(bytes[2 * i]);
    const std::uint16_t hi = static_cast<std::uint8_t>(bytes[2 * i + 1]);
    const std::int16_t v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    out[i] = static_cast<double>(v) / 32768.0;
  }
  return out;
}

std::vector<double> generate_input(const SignalSpec& spec, std::size_t n,
                                   std::uint64_t seed) {
  if (!(spec.variance > 0.0) || !std::isfinite(spec.variance))
    throw std::invalid_argument("input variance must be positive and finite");
  std::vector<double> out;
  out.reserve(n);
  switch (spec.kind) {
    case SignalKind::WhiteGaussian: {
      RandomStream rng(seed);
      const double scale = std::sqrt(spec.variance);
      for (std::size_t i = 0; i < n; ++i) out.push_back(scale * rng.gaussian());
      break;
    }
    case SignalKind::Ar1: {
      if (!(std::fabs(spec.pole) < 1.0))
        throw std::invalid_argument("AR(1) pole must satisfy |pole| < 1");
      RandomStream rng(seed);
      const double scale = std::sqrt(spec.variance);
      double state = 0.0;
      for (std::size_t i = 0; i < spec.warmup + n; ++i) {
        state = spec.pole * state + scale * rng.gaussian();
        if (i >= spec.warmup) out.push_back(state);
      }
      break;
    }
    case SignalKind::PcmFile: {
      std::vector<double> samples = pcm_load(spec.path);
      if (n > samples.size())
        throw Error("requested " + std::to_string(n) + " samples but '" + spec.path +
                    "' holds " + std::to_string(samples.size()));
      samples.resize(n);
      out = std::move(samples);
      break;
    }
  }
  return out;
}

DesiredSignal desired_signal(const ImpulseResponse& h, std::span<const double> x,
                             const NoiseModel& noise) {
  if (h.taps.empty()) throw DimensionError("impulse response is empty");
  DesiredSignal d;
  const std::size_t n = x.size();
  const std::size_t L = h.taps.size();
  d.clean.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t span = std::min(L - 1, k);
    double acc = 0.0;
    for (std::size_t i = 0; i <= span; ++i) acc += h.taps[i] * x[k - i];
    d.clean[k] = acc;
  }
  if (std::isinf(noise.snr_db)) {
    d.noisy = d.clean;
    return d;
  }
  const double mu = mean_of(d.clean);
  double var = 0.0;
  for (double c : d.clean) var += (c - mu) * (c - mu);
  var = n > 0 ? var / static_cast<double>(n) : 0.0;
  if (var == 0.0) throw Error("clean signal has zero variance; cannot set the SNR");
  const double sigma_v = std::sqrt(var * std::pow(10.0, -noise.snr_db / 10.0));
  RandomStream rng(noise.seed);
  d.noisy.resize(n);
  for (std::size_t k = 0; k < n; ++k) d.noisy[k] = d.clean[k] + sigma_v * rng.gaussian();
  return d;
}

}  // namespace sparsid

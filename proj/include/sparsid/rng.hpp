#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace sparsid {

// splitmix64 mixer; used only to spread (base, tag) pairs into independent
// stream seeds so that nearby bases cannot collide across streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(splitmix64(base) ^ tag);
}

// Stream tags so the per-realization input and noise sequences never overlap.
inline constexpr std::uint64_t kSeedTagInput = 0x494e505554ULL;     // "INPUT"
inline constexpr std::uint64_t kSeedTagNoise = 0x4e4f495345ULL;     // "NOISE"
inline constexpr std::uint64_t kSeedTagSampling = 0x53414d50ULL;    // "SAMP"

// Reproducible random stream. mt19937_64 plus explicit 53-bit uniforms and
// Box-Muller gaussians: the same seed yields the same samples on every
// conforming platform, unlike std::normal_distribution whose algorithm is
// implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  // uniform on (0, 1]; never 0, so log() below is safe
  double uniform01() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next_u64() { return gen_(); }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t cutoff = max - max % n;  // cutoff is a multiple of n
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= cutoff);
    return r % n;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sparsid

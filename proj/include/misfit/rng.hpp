#pragma once

#include <cmath>
#include <cstdint>

namespace misfit {

// Counter-based generator: the i-th output is a bijective mix of
// key + i * golden, where the key is derived from (seed, stream).
// Random numbers therefore depend only on (seed, stream, counter), which is
// what makes data files reproducible across platforms and languages.
//
// Stream ids used throughout the project. Derived streams (one per grid
// point, per draw, ...) add an offset to one of these bases.
namespace streams {
constexpr std::uint64_t kInputs = 0;       // x locations
constexpr std::uint64_t kMode = 1;         // mixture mode choices
constexpr std::uint64_t kNoise = 2;        // observation noise
constexpr std::uint64_t kInit = 3;         // weight initialization
constexpr std::uint64_t kElbo = 4;         // reparameterization draws
constexpr std::uint64_t kPredictive = 5;   // posterior draws for prediction
constexpr std::uint64_t kSampling = 6;     // model sampling entry point
constexpr std::uint64_t kCurve = 1'000;    // + grid index, one per curve point
}  // namespace streams

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed ^ 0x5851f42d4c957f2dULL) + stream)) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the sine partner is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace misfit

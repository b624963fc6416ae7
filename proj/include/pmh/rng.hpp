#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pmh {

/// SplitMix64 finalizer used to turn (seed, stream) pairs into engine seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// A seedable random stream. Distinct (seed, stream) pairs give independent
/// streams, so consumers can hand out fresh streams without coordinating.
///
/// Variates are produced from the raw engine output (uniform bits, polar
/// method for normals) rather than the implementation-defined <random>
/// distributions, so a given (seed, stream) reproduces the same draws on
/// every standard library.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix64(seed ^ mix64(stream))) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal draw (Marsaglia polar method).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pmh

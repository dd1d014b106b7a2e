#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace v2x {

/// Seeded pseudo-random source for every stochastic draw in a run.
///
/// The mt19937_64 output sequence is fixed by the C++ standard; the
/// distribution transforms below are written out explicitly because the
/// std::*_distribution classes are implementation-defined and would break
/// run reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : m_engine(seed) {}

  uint64_t u64() { return m_engine(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0; modulo bias is irrelevant at
  /// the n values used here (scenario generators, small index picks).
  uint64_t below(uint64_t n) { return m_engine() % n; }

  /// Standard normal via Box-Muller. Consumes exactly two uniform draws per
  /// call; no spare is cached, so draw accounting stays positional.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double std_dev) { return mean + std_dev * normal(); }

  /// 32 seed bytes for key generation, drawn big-endian from the stream.
  std::array<uint8_t, 32> seed_bytes() {
    std::array<uint8_t, 32> out{};
    for (int word = 0; word < 4; ++word) {
      uint64_t v = m_engine();
      for (int i = 0; i < 8; ++i)
        out[word * 8 + i] = static_cast<uint8_t>(v >> (56 - 8 * i));
    }
    return out;
  }

 private:
  std::mt19937_64 m_engine;
};

}  // namespace v2x

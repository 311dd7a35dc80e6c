#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace locjepa {

/// Seeded random stream. Only the raw engine output is consumed, never the
/// implementation-defined std distributions, so draws are identical across
/// standard libraries. The whole state is the engine state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t index(std::uint64_t n);

  /// Standard normal via Box-Muller; consumes two draws, caches nothing.
  double normal();

  /// Normal(0, std) truncated to [-2 std, 2 std] by rejection.
  double trunc_normal(double std);

  /// Independent child stream derived from this stream's next output.
  Rng split();

  std::string state() const;
  void set_state(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace locjepa

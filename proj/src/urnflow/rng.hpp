#pragma once

#include <cstdint>
#include <random>

namespace urnflow {

/// Seeded generator with independent per-replicate streams.
///
/// A stream is keyed by (master seed, stream index) through std::seed_seq, so
/// replicate r always sees the same sequence regardless of which worker runs
/// it. Uniform variates are built from the raw 64-bit output rather than
/// std::uniform_real_distribution, whose algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}

  Rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32),
                      0x75726eu};
    engine_.seed(seq);
  }

  static Rng for_stream(std::uint64_t master_seed, std::uint64_t stream) {
    return Rng(master_seed, stream);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace urnflow

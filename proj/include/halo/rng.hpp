#pragma once

#include <cstdint>

#include "halo/errors.hpp"

namespace halo {

// Counter-based pseudo-random generator (splitmix64). The state is a plain
// 64-bit counter advanced by a fixed odd increment; each output is a finalizer
// hash of the counter. Properties we rely on:
//   * identical seed => bit-identical stream, on every platform and compiler;
//   * O(1) skip-ahead (the state is just seed + n*GAMMA);
//   * cheap derivation of statistically independent substreams, which makes
//     Monte Carlo batches reproducible regardless of how work is sharded
//     across threads.
// Not cryptographic; quality is ample for simulation use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Next raw 64-bit value.
  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 bits of mantissa.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Deliberately computes one variate per call
  // (two uniforms consumed, sine branch discarded) instead of caching the pair:
  // the draw count per call is then fixed, which keeps stream accounting exact.
  double next_gaussian();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t next_below(std::uint64_t n);

  // Derive the seed of an independent substream. Feeds (base, stream) through
  // two rounds of the splitmix64 finalizer so that nearby ids decorrelate.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t stream);

 private:
  std::uint64_t state_;
};

// Conventional substream ids, so that every consumer of a base seed agrees on
// which stream is which. Dynamics noise and observation noise must never share
// a stream: closing the control loop must not perturb the dynamics draws.
enum StreamId : std::uint64_t {
  kStreamDynamics = 0,
  kStreamObservation = 1,
  kStreamInit = 2,
  kStreamTangent = 3,
};

}  // namespace halo

#pragma once

#include <cstdint>

namespace burrow {

// Deterministic 64-bit generator (splitmix64). All randomness in the toolkit
// flows through this so that trial runs, training and planning replay
// byte-identically for a given seed, independent of platform stdlib details.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // uniform in [0, 1), 53-bit resolution
  double uniform();
  double uniform(double lo, double hi);

  // Box-Muller; one transcendental pair per draw, no cached second value
  double normal(double mean, double stddev);

  // derive an independent stream id from (stream, salt); used for per-trial
  // and per-role sub-streams: Rng(mix(master_seed, trial_index))
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
  }

 private:
  std::uint64_t state_;
};

// role tags for sub-stream derivation (arbitrary distinct constants)
namespace stream {
inline constexpr std::uint64_t kYaw = 0x79617721;
inline constexpr std::uint64_t kPitch = 0x70697463;
inline constexpr std::uint64_t kExplore = 0x6578706c;
inline constexpr std::uint64_t kEnvNoise = 0x656e766e;
inline constexpr std::uint64_t kFieldNoise = 0x666c646e;
inline constexpr std::uint64_t kGait = 0x67616974;
inline constexpr std::uint64_t kDropout = 0x64726f70;
inline constexpr std::uint64_t kShuffle = 0x73687566;
inline constexpr std::uint64_t kInit = 0x696e6974;
inline constexpr std::uint64_t kPerturb = 0x70657274;
inline constexpr std::uint64_t kTrial = 0x7472696c;
inline constexpr std::uint64_t kReplay = 0x7265706c;
}  // namespace stream

}  // namespace burrow

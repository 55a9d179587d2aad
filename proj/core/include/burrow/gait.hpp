#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace burrow {

inline constexpr int kJointsPerAxis = 5;
inline constexpr double kAngleLimitDeg = 120.0;  // safe servo range, relative frame
inline constexpr double kServoNeutralDeg = 180.0;  // servo frame = relative + 180

// One control tick: 5 yaw + 5 pitch joint angles in degrees relative to
// neutral (0 = straight body).
struct MotorCommand {
  std::array<double, kJointsPerAxis> yaw{};
  std::array<double, kJointsPerAxis> pitch{};

  double& at(int j);          // j in [0,10): yaw 0..4 then pitch 0..4
  double at(int j) const;
  bool finite() const;
  bool within_limits() const;

  friend bool operator==(const MotorCommand&, const MotorCommand&) = default;
};

struct TrialConfig {
  int steps = 130;       // commands per trial
  double tick_s = 0.39;  // control period, seconds

  void validate() const;  // throws std::invalid_argument
};

enum class PhaseMode {
  kLiteral,      // phi_i = i / (5 f) radians
  kUniformWave,  // phi_i = 2 pi i / 5 (one wavelength across the body)
};

enum class PitchMode { kOff, kRandom };

// Parameters for the three data-collection families.
struct GaitSpec {
  enum class Kind { kRandom, kSinusoid, kGreedyEpsilon } kind = Kind::kSinusoid;
  double sigma_deg = 50.0;      // random / greedy exploration std dev
  double amplitude_deg = 30.0;  // sinusoid amplitude
  double frequency_hz = 0.2;    // sinusoid frequency
  double epsilon = 0.5;         // greedy exploration probability
  PhaseMode phase_mode = PhaseMode::kLiteral;
  PitchMode pitch_mode = PitchMode::kRandom;

  void validate() const;
};

MotorCommand clip_command(const MotorCommand& cmd);

std::vector<MotorCommand> gen_random(double sigma_deg, const TrialConfig& cfg,
                                     std::uint64_t seed);

std::vector<MotorCommand> gen_sinusoid(double amplitude_deg, double frequency_hz,
                                       const TrialConfig& cfg, PhaseMode phase_mode,
                                       PitchMode pitch_mode, std::uint64_t seed);

std::vector<MotorCommand> gen_greedy_epsilon(double epsilon, double amplitude_deg,
                                             double frequency_hz, double sigma_deg,
                                             const TrialConfig& cfg, std::uint64_t seed);

// Dispatch on spec.kind with the shared seeding scheme.
std::vector<MotorCommand> generate_gait(const GaitSpec& spec, const TrialConfig& cfg,
                                        std::uint64_t seed);

// std dev of the random pitch component in sinusoidal trials
inline constexpr double kSinusoidPitchSigmaDeg = 15.0;

}  // namespace burrow

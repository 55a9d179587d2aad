#include "burrow/gait.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "burrow/rng.hpp"

namespace burrow {

namespace {

constexpr double kPi = std::numbers::pi;

double yaw_wave(double amplitude, double freq, double t, int joint, PhaseMode mode) {
  double phase = mode == PhaseMode::kLiteral ? joint / (kJointsPerAxis * freq)
                                             : 2.0 * kPi * joint / kJointsPerAxis;
  return amplitude * std::sin(2.0 * kPi * freq * t + phase);
}

}  // namespace

double& MotorCommand::at(int j) { return j < kJointsPerAxis ? yaw[j] : pitch[j - kJointsPerAxis]; }
double MotorCommand::at(int j) const {
  return j < kJointsPerAxis ? yaw[j] : pitch[j - kJointsPerAxis];
}

bool MotorCommand::finite() const {
  for (int j = 0; j < 2 * kJointsPerAxis; ++j)
    if (!std::isfinite(at(j))) return false;
  return true;
}

bool MotorCommand::within_limits() const {
  for (int j = 0; j < 2 * kJointsPerAxis; ++j)
    if (std::abs(at(j)) > kAngleLimitDeg) return false;
  return true;
}

void TrialConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("TrialConfig: steps must be >= 1");
  if (!(tick_s > 0)) throw std::invalid_argument("TrialConfig: tick_s must be > 0");
}

void GaitSpec::validate() const {
  if (sigma_deg < 0) throw std::invalid_argument("GaitSpec: sigma_deg must be >= 0");
  if (amplitude_deg < 0) throw std::invalid_argument("GaitSpec: amplitude_deg must be >= 0");
  if (!(frequency_hz > 0)) throw std::invalid_argument("GaitSpec: frequency_hz must be > 0");
  if (epsilon < 0 || epsilon > 1)
    throw std::invalid_argument("GaitSpec: epsilon must be in [0,1]");
}

MotorCommand clip_command(const MotorCommand& cmd) {
  if (!cmd.finite()) throw std::invalid_argument("clip_command: non-finite angle");
  MotorCommand out = cmd;
  for (int j = 0; j < 2 * kJointsPerAxis; ++j)
    out.at(j) = std::min(kAngleLimitDeg, std::max(-kAngleLimitDeg, out.at(j)));
  return out;
}

std::vector<MotorCommand> gen_random(double sigma_deg, const TrialConfig& cfg,
                                     std::uint64_t seed) {
  if (sigma_deg < 0) throw std::invalid_argument("gen_random: sigma_deg must be >= 0");
  cfg.validate();
  Rng yaw_rng(Rng::mix(seed, stream::kYaw));
  Rng pitch_rng(Rng::mix(seed, stream::kPitch));
  std::vector<MotorCommand> out(cfg.steps);
  for (auto& cmd : out) {
    for (int i = 0; i < kJointsPerAxis; ++i) cmd.yaw[i] = yaw_rng.normal(0.0, sigma_deg);
    for (int i = 0; i < kJointsPerAxis; ++i) cmd.pitch[i] = pitch_rng.normal(0.0, sigma_deg);
    cmd = clip_command(cmd);
  }
  return out;
}

std::vector<MotorCommand> gen_sinusoid(double amplitude_deg, double frequency_hz,
                                       const TrialConfig& cfg, PhaseMode phase_mode,
                                       PitchMode pitch_mode, std::uint64_t seed) {
  if (!(frequency_hz > 0)) throw std::invalid_argument("gen_sinusoid: frequency_hz must be > 0");
  if (amplitude_deg < 0) throw std::invalid_argument("gen_sinusoid: amplitude_deg must be >= 0");
  cfg.validate();
  Rng pitch_rng(Rng::mix(seed, stream::kPitch));
  std::vector<MotorCommand> out(cfg.steps);
  for (int k = 0; k < cfg.steps; ++k) {
    double t = k * cfg.tick_s;
    for (int i = 0; i < kJointsPerAxis; ++i)
      out[k].yaw[i] = yaw_wave(amplitude_deg, frequency_hz, t, i, phase_mode);
    if (pitch_mode == PitchMode::kRandom)
      for (int i = 0; i < kJointsPerAxis; ++i)
        out[k].pitch[i] = pitch_rng.normal(0.0, kSinusoidPitchSigmaDeg);
    out[k] = clip_command(out[k]);
  }
  return out;
}

std::vector<MotorCommand> gen_greedy_epsilon(double epsilon, double amplitude_deg,
                                             double frequency_hz, double sigma_deg,
                                             const TrialConfig& cfg, std::uint64_t seed) {
  if (epsilon < 0 || epsilon > 1)
    throw std::invalid_argument("gen_greedy_epsilon: epsilon must be in [0,1]");
  if (!(frequency_hz > 0))
    throw std::invalid_argument("gen_greedy_epsilon: frequency_hz must be > 0");
  cfg.validate();
  Rng yaw_rng(Rng::mix(seed, stream::kYaw));
  Rng pitch_rng(Rng::mix(seed, stream::kPitch));
  Rng explore_rng(Rng::mix(seed, stream::kExplore));
  // the non-explored ticks reproduce gen_sinusoid bit-for-bit
  std::vector<MotorCommand> wave =
      gen_sinusoid(amplitude_deg, frequency_hz, cfg, PhaseMode::kLiteral, PitchMode::kOff, seed);
  std::vector<MotorCommand> out(cfg.steps);
  for (int k = 0; k < cfg.steps; ++k) {
    // one exploration decision per tick: all five yaw joints switch together
    bool explore = epsilon > 0.0 && explore_rng.uniform() < epsilon;
    for (int i = 0; i < kJointsPerAxis; ++i)
      out[k].yaw[i] = explore ? yaw_rng.normal(0.0, sigma_deg) : wave[k].yaw[i];
    for (int i = 0; i < kJointsPerAxis; ++i) out[k].pitch[i] = pitch_rng.normal(0.0, sigma_deg);
    out[k] = clip_command(out[k]);
  }
  return out;
}

std::vector<MotorCommand> generate_gait(const GaitSpec& spec, const TrialConfig& cfg,
                                        std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case GaitSpec::Kind::kRandom:
      return gen_random(spec.sigma_deg, cfg, seed);
    case GaitSpec::Kind::kSinusoid:
      return gen_sinusoid(spec.amplitude_deg, spec.frequency_hz, cfg, spec.phase_mode,
                          spec.pitch_mode, seed);
    case GaitSpec::Kind::kGreedyEpsilon:
      return gen_greedy_epsilon(spec.epsilon, spec.amplitude_deg, spec.frequency_hz,
                                spec.sigma_deg, cfg, seed);
  }
  throw std::logic_error("generate_gait: bad kind");
}

}  // namespace burrow

#include "burrow/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace burrow {

namespace {

constexpr double kMinSensorHeightCm = 0.1;
constexpr double kCoherenceEps = 1e-6;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void EnvConfig::validate() const {
  if (descent_gain_cm < 0 || rise_gain_cm < 0 || height_noise_cm < 0 || field_noise_ut < 0 ||
      noise_floor < 0)
    throw std::invalid_argument("EnvConfig: gains and noise scales must be >= 0");
  if (!(activity_ref_deg > 0) || !(erratic_ref_deg > 0))
    throw std::invalid_argument("EnvConfig: reference speeds must be > 0");
  if (!(boundary_scale_cm > 0) || boundary_scale_cm >= surface_height_cm)
    throw std::invalid_argument("EnvConfig: need 0 < boundary_scale_cm < surface_height_cm");
  if (boundary_strength < 0 || boundary_strength > 1)
    throw std::invalid_argument("EnvConfig: boundary_strength must be in [0,1]");
  if (!(link_length_cm > 0)) throw std::invalid_argument("EnvConfig: link_length_cm must be > 0");
  for (double d : bin_cm)
    if (!(d > 0)) throw std::invalid_argument("EnvConfig: bin dims must be > 0");
}

MotionFeatures motion_features(const MotorCommand& prev, const MotorCommand& cmd,
                               const EnvConfig& cfg) {
  std::array<double, kJointsPerAxis> u;
  double abs_sum = 0.0, sq_sum = 0.0, adj_sum = 0.0, pitch_sum = 0.0;
  for (int i = 0; i < kJointsPerAxis; ++i) {
    u[i] = cmd.yaw[i] - prev.yaw[i];
    abs_sum += std::abs(u[i]);
    sq_sum += u[i] * u[i];
    pitch_sum += std::abs(cmd.pitch[i] - prev.pitch[i]);
  }
  for (int i = 0; i + 1 < kJointsPerAxis; ++i) adj_sum += u[i] * u[i + 1];
  MotionFeatures f;
  f.coherence = adj_sum / (sq_sum + kCoherenceEps);
  f.activity = std::min(1.0, abs_sum / (kJointsPerAxis * cfg.activity_ref_deg));
  f.erraticness = std::min(1.0, pitch_sum / (kJointsPerAxis * cfg.erratic_ref_deg));
  return f;
}

double descent_delta(double coherence, double activity, double erraticness, double proximity,
                     const EnvConfig& cfg) {
  double thrust = cfg.descent_gain_cm * activity * std::max(coherence, 0.0);
  return -thrust * (1.0 - cfg.boundary_strength * proximity) + cfg.rise_gain_cm * erraticness;
}

EnvState make_initial_state(const EnvConfig& cfg) {
  cfg.validate();
  return EnvState{cfg.surface_height_cm, MotorCommand{}};
}

EnvState step(const EnvState& state, const MotorCommand& cmd, const EnvConfig& cfg,
              Rng* noise_rng) {
  if (!cmd.finite() || !cmd.within_limits())
    throw std::invalid_argument("step: command must be clipped to the safe range");
  MotionFeatures f = motion_features(state.prev_command, cmd, cfg);
  double proximity = std::clamp(1.0 - state.body_height_cm / cfg.boundary_scale_cm, 0.0, 1.0);
  double dh = descent_delta(f.coherence, f.activity, f.erraticness, proximity, cfg);
  if (noise_rng) {
    // erratic pitch churn fluidizes the medium; its randomness scales with it
    double scale = cfg.height_noise_cm * (cfg.noise_floor + f.erraticness);
    dh += noise_rng->normal(0.0, scale);
  }
  EnvState next;
  next.body_height_cm = std::clamp(state.body_height_cm + dh, 0.0, cfg.surface_height_cm);
  next.prev_command = cmd;
  return next;
}

std::array<double, 3> sensor_heights(const EnvState& state, const MotorCommand& cmd,
                                     const EnvConfig& cfg) {
  // cumulative pitch chain from the mid-body outward
  std::array<double, kJointsPerAxis> phi;
  double acc = 0.0;
  for (int i = 0; i < kJointsPerAxis; ++i) {
    acc += cmd.pitch[i];
    phi[i] = deg2rad(acc);
  }
  double head = state.body_height_cm;
  for (int j = 2; j < kJointsPerAxis; ++j) head += cfg.link_length_cm * std::sin(phi[j]);
  double tail = state.body_height_cm;
  for (int j = 0; j < 2; ++j) tail -= cfg.link_length_cm * std::sin(phi[j]);
  return {std::max(head, kMinSensorHeightCm),
          std::max(state.body_height_cm, kMinSensorHeightCm),
          std::max(tail, kMinSensorHeightCm)};
}

FieldSample sensor_field(const MagnetArrayConfig& array, const CalibrationCurve& curve,
                         double height_cm, const EnvConfig& cfg, Rng* noise_rng) {
  double z_mm = std::max(height_cm, kMinSensorHeightCm) * 10.0;
  FieldSample dir = field_at(array, {0.0, 0.0, z_mm});
  double dir_mag = net_magnitude(dir);
  double mag = curve.k_ut_mm / z_mm;
  FieldSample b;
  if (dir_mag > 0) {
    b = {dir.bx / dir_mag * mag, dir.by / dir_mag * mag, dir.bz / dir_mag * mag};
  } else {
    b = {0.0, 0.0, mag};
  }
  if (noise_rng) {
    b.bx += noise_rng->normal(0.0, cfg.field_noise_ut);
    b.by += noise_rng->normal(0.0, cfg.field_noise_ut);
    b.bz += noise_rng->normal(0.0, cfg.field_noise_ut);
  }
  return b;
}

TrialRecord run_trial(const GaitOrSequence& gait_or_sequence, const EnvConfig& cfg,
                      const TrialConfig& trial_cfg, const MagnetArrayConfig& array,
                      const CalibrationCurve& curve, std::uint64_t seed) {
  cfg.validate();
  trial_cfg.validate();
  curve.validate();

  std::vector<MotorCommand> commands;
  if (const GaitSpec* spec = std::get_if<GaitSpec>(&gait_or_sequence)) {
    commands = generate_gait(*spec, trial_cfg, Rng::mix(seed, stream::kGait));
  } else {
    commands = std::get<std::vector<MotorCommand>>(gait_or_sequence);
    if (static_cast<int>(commands.size()) != trial_cfg.steps)
      throw std::invalid_argument("run_trial: sequence length != trial steps");
  }

  // resolve the default moment once; every sensor_field call reuses it
  MagnetArrayConfig resolved = array;
  resolved.moment_am2 = array.moment();

  Rng env_rng(Rng::mix(seed, stream::kEnvNoise));
  Rng field_rng(Rng::mix(seed, stream::kFieldNoise));
  Rng* env_noise = cfg.height_noise_cm > 0 ? &env_rng : nullptr;
  Rng* field_noise = cfg.field_noise_ut > 0 ? &field_rng : nullptr;

  TrialRecord record;
  record.tick_s = trial_cfg.tick_s;
  record.ticks.reserve(trial_cfg.steps);

  EnvState state = make_initial_state(cfg);
  for (int k = 0; k < trial_cfg.steps; ++k) {
    const MotorCommand cmd = clip_command(commands[k]);
    state = step(state, cmd, cfg, env_noise);

    TrialTick tick;
    tick.t_s = k * trial_cfg.tick_s;
    tick.command = cmd;
    tick.true_height_cm = state.body_height_cm;
    std::array<double, 3> sensors = sensor_heights(state, cmd, cfg);
    double est_sum = 0.0;
    for (int s = 0; s < 3; ++s) {
      tick.fields[s] = sensor_field(resolved, curve, sensors[s], cfg, field_noise);
      double est_mm = height_from_field(curve, net_magnitude(tick.fields[s]));
      tick.est_heights_cm[s] = est_mm / 10.0;
      est_sum += tick.est_heights_cm[s];
    }
    tick.label_height_cm = est_sum / 3.0;
    record.ticks.push_back(tick);
  }
  return record;
}

}  // namespace burrow

#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "burrow/gait.hpp"
#include "burrow/magnetics.hpp"
#include "burrow/rng.hpp"

namespace burrow {

// Phenomenological granular-medium surrogate. Coherent lateral undulation
// descends, erratic pitch motion drifts up, and descent stiffens near the
// container base. All coefficients are configuration; the shipped defaults
// were tuned so that sinusoidal gaits burrow deep, random gaits stay shallow,
// and greedy-epsilon mixtures land in between.
struct EnvConfig {
  double surface_height_cm = 40.0;  // start height above the base
  double descent_gain_cm = 0.52;    // eta: max descent per tick
  double activity_ref_deg = 14.0;   // U_ref: per-joint yaw speed scale, deg/tick
  double boundary_scale_cm = 10.0;  // H_b: boundary layer thickness
  double boundary_strength = 0.8;   // beta in [0,1]: descent attenuation at the base
  double rise_gain_cm = 0.02;       // rho: max upward drift per tick
  double erratic_ref_deg = 50.0;    // V_ref: per-joint pitch speed scale, deg/tick
  double height_noise_cm = 0.05;    // process noise scale (modulated by erraticness)
  double noise_floor = 0.05;        // idle fraction of height_noise_cm
  double field_noise_ut = 0.5;      // per-axis magnetometer noise
  double link_length_cm = 9.0;      // body link length for the pitch chain
  std::array<double, 3> bin_cm{182.88, 91.44, 60.96};

  void validate() const;
};

struct EnvState {
  double body_height_cm = 0.0;
  MotorCommand prev_command{};
};

// Per-tick log of one trial.
struct TrialTick {
  double t_s = 0.0;
  MotorCommand command{};
  std::array<FieldSample, 3> fields{};     // head, mid, tail
  std::array<double, 3> est_heights_cm{};  // calibrated estimates
  double true_height_cm = 0.0;
  double label_height_cm = 0.0;  // mean of the three estimates
};

struct TrialRecord {
  double tick_s = 0.39;
  std::vector<TrialTick> ticks;
};

// Descent law evaluated on precomputed motion features; step() derives the
// features from consecutive commands. Exposed so the formula itself is
// testable at feature values no command pair can reach.
double descent_delta(double coherence, double activity, double erraticness,
                     double proximity, const EnvConfig& cfg);

// Motion features of a command transition.
struct MotionFeatures {
  double coherence = 0.0;    // adjacent yaw-velocity correlation, <= 1 by construction
  double activity = 0.0;     // mean |yaw velocity| / activity_ref, saturated at 1
  double erraticness = 0.0;  // mean |pitch velocity| / erratic_ref, saturated at 1
};
MotionFeatures motion_features(const MotorCommand& prev, const MotorCommand& cmd,
                               const EnvConfig& cfg);

EnvState make_initial_state(const EnvConfig& cfg);

// Advance one tick. cmd must already be clipped. noise_rng may be null for
// the deterministic variant.
EnvState step(const EnvState& state, const MotorCommand& cmd, const EnvConfig& cfg,
              Rng* noise_rng);

// Heights of the head / mid / tail magnetometers from the body height and the
// cumulative pitch chain of the current command, each clamped to >= 0.1 cm.
std::array<double, 3> sensor_heights(const EnvState& state, const MotorCommand& cmd,
                                     const EnvConfig& cfg);

// Synthesize one magnetometer reading at a sensor height. Direction comes
// from the dipole-array model at the bin center; magnitude follows the
// calibration law k/H so that calibrated estimates invert to the true height
// (a faithful grid-array magnitude is nearly height-independent above the bin
// center and would not carry depth information).
FieldSample sensor_field(const MagnetArrayConfig& array, const CalibrationCurve& curve,
                         double height_cm, const EnvConfig& cfg, Rng* noise_rng);

using GaitOrSequence = std::variant<GaitSpec, std::vector<MotorCommand>>;

// Run one seeded trial: generate or take commands, step the surrogate, and
// log sensor readings and calibrated heights per tick.
TrialRecord run_trial(const GaitOrSequence& gait_or_sequence, const EnvConfig& cfg,
                      const TrialConfig& trial_cfg, const MagnetArrayConfig& array,
                      const CalibrationCurve& curve, std::uint64_t seed);

}  // namespace burrow

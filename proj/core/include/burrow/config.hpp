#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "burrow/gait.hpp"
#include "burrow/magnetics.hpp"
#include "burrow/model.hpp"
#include "burrow/planner.hpp"
#include "burrow/simenv.hpp"
#include "burrow/tnc.hpp"

namespace burrow {

// Data-collection protocol: group sizes for the three gait families.
struct CollectConfig {
  int random_trials = 54;
  double random_sigma_deg = 50.0;
  std::vector<double> sinusoid_amplitudes_deg{15.0, 30.0, 45.0};
  int sinusoid_seeds = 12;  // per (amplitude, pitch mode) cell
  std::vector<double> greedy_epsilons{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> greedy_sigmas_deg{15.0, 30.0};
  int greedy_seeds = 8;  // per (epsilon, sigma) cell
  double frequency_hz = 0.2;

  int total_trials() const;
  void validate() const;
};

struct EvaluateConfig {
  int n_trials = 10;
  double random_sigma_deg = 50.0;
  double sinusoid_amplitude_deg = 30.0;
  double frequency_hz = 0.2;
  double greedy_epsilon = 0.5;
  double greedy_sigma_deg = 30.0;
  double success_band_cm = 1.0;  // success = |final - target| <= band

  void validate() const;
};

struct CalibrateConfig {
  double min_height_mm = 20.0;
  double max_height_mm = 450.0;
  int samples = 200;

  void validate() const;
};

// Full experiment description; one file drives the whole pipeline.
struct RunConfig {
  std::uint64_t master_seed = 0;
  EnvConfig env;
  TrialConfig trial;
  MagnetArrayConfig array;
  CalibrationCurve calibration;
  CalibrateConfig calibrate;
  ModelConfig model;
  TrainingConfig training;
  PlanConfig plan;
  TncConfig tnc;
  CollectConfig collect;
  EvaluateConfig evaluate;

  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&);
};

// Section-based key=value text format; '#' starts a comment. Unknown sections
// or keys are errors (misconfiguration guard); parse errors carry the line
// number. save -> load is the identity.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);
void save_config(const RunConfig& cfg, const std::string& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace burrow

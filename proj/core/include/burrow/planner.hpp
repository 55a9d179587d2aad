#pragma once

#include <cstdint>
#include <vector>

#include "burrow/model.hpp"
#include "burrow/simenv.hpp"
#include "burrow/tnc.hpp"

namespace burrow {

// Sequential per-tick planning: each tick solves a box-constrained truncated
// Newton problem over the next command (servo frame, [0,360] per joint),
// warm-started from the previous solution plus a uniform perturbation.
struct PlanConfig {
  double target_height_cm = 15.0;
  int steps = 130;
  double perturb_scale_deg = 10.0;
  double penalty_weight = 1e-3;  // per squared degree beyond the safe range
  std::uint64_t seed = 0;
  double bound_lo_deg = 0.0;    // servo frame
  double bound_hi_deg = 360.0;
  // Pin pitch joints at neutral. The sensor-mean label is posture-sensitive,
  // so a free pitch axis lets the optimizer tilt the body to move the
  // estimate instead of burrowing; yaw carries all descent-relevant actuation.
  int freeze_pitch = 1;

  void validate(double surface_height_cm) const;
};

struct PlanResult {
  std::vector<MotorCommand> sequence;     // relative frame, clipped
  std::vector<double> predicted_cm;       // model prediction after each tick
  std::vector<double> objective;          // optimizer value per tick
};

// Residual + range-penalty objective for one candidate command in the servo
// frame, given the already-planned prefix.
double plan_objective(const ModelParams& params, std::span<const MotorCommand> prefix,
                      std::span<const double> m_servo, double target_cm,
                      double penalty_weight);

// Same value plus its gradient with respect to the candidate.
double plan_objective_grad(const ModelParams& params, std::span<const MotorCommand> prefix,
                           std::span<const double> m_servo, double target_cm,
                           double penalty_weight, std::span<double> grad_out);

PlanResult plan_sequence(const ModelParams& params, const PlanConfig& pcfg,
                         const TncConfig& tcfg);

struct EvalResult {
  std::vector<double> final_heights_cm;  // per trial
  std::vector<double> mean_trace_cm;     // per tick, across trials
  std::vector<double> std_trace_cm;
};

// n seeded rollouts of a plan or gait; statistics over true heights.
EvalResult evaluate(const GaitOrSequence& plan_or_gait, const EnvConfig& env,
                    const TrialConfig& trial_cfg, const MagnetArrayConfig& array,
                    const CalibrationCurve& curve, int n_trials, std::uint64_t seed);

struct RefineConfig {
  int rounds = 5;
  int finetune_epochs = 5;
  double lr_scale = 0.1;       // fine-tune at learning_rate * lr_scale
  int replay_pairs = 520;      // seeded sample of older pairs added per round
};

struct RefineResult {
  ModelParams params;
  std::vector<double> final_heights_cm;  // achieved height per round
};

// Reinforcement-style loop: plan, execute in the environment, append the
// trial's pairs to the dataset, fine-tune on fresh pairs plus a replay sample.
RefineResult refine_policy(const ModelParams& params, const EnvConfig& env,
                           const TrialConfig& trial_cfg, const MagnetArrayConfig& array,
                           const CalibrationCurve& curve, TrainingSet& dataset,
                           const RefineConfig& rcfg, const PlanConfig& pcfg,
                           const TncConfig& tcfg, const TrainingConfig& tcfg_train);

}  // namespace burrow

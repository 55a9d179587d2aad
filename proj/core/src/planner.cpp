#include "burrow/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "burrow/rng.hpp"

namespace burrow {

namespace {

MotorCommand servo_to_relative(std::span<const double> m_servo) {
  MotorCommand cmd;
  for (int j = 0; j < 2 * kJointsPerAxis; ++j) cmd.at(j) = m_servo[j] - kServoNeutralDeg;
  return cmd;
}

// squared overshoot beyond the safe range, and its derivative
double range_penalty(std::span<const double> m_servo, double weight, double* dpen) {
  double pen = 0.0;
  for (int j = 0; j < 2 * kJointsPerAxis; ++j) {
    double rel = m_servo[j] - kServoNeutralDeg;
    double over = std::abs(rel) - kAngleLimitDeg;
    if (over > 0) {
      pen += weight * over * over;
      if (dpen) dpen[j] = 2.0 * weight * over * (rel > 0 ? 1.0 : -1.0);
    } else if (dpen) {
      dpen[j] = 0.0;
    }
  }
  return pen;
}

}  // namespace

void PlanConfig::validate(double surface_height_cm) const {
  if (!(target_height_cm > 0) || target_height_cm >= surface_height_cm)
    throw std::invalid_argument("PlanConfig: need 0 < target_height_cm < surface height");
  if (steps < 1) throw std::invalid_argument("PlanConfig: steps must be >= 1");
  if (perturb_scale_deg < 0)
    throw std::invalid_argument("PlanConfig: perturb_scale_deg must be >= 0");
  if (penalty_weight < 0) throw std::invalid_argument("PlanConfig: penalty_weight must be >= 0");
  if (!(bound_lo_deg < bound_hi_deg)) throw std::invalid_argument("PlanConfig: bad bounds");
}

double plan_objective(const ModelParams& params, std::span<const MotorCommand> prefix,
                      std::span<const double> m_servo, double target_cm,
                      double penalty_weight) {
  return plan_objective_grad(params, prefix, m_servo, target_cm, penalty_weight, {});
}

double plan_objective_grad(const ModelParams& params, std::span<const MotorCommand> prefix,
                           std::span<const double> m_servo, double target_cm,
                           double penalty_weight, std::span<double> grad_out) {
  if (m_servo.size() != 2 * kJointsPerAxis)
    throw std::invalid_argument("plan_objective: candidate must have 10 coordinates");
  const double scale = params.config().label_scale_cm;

  std::vector<MotorCommand> seq(prefix.begin(), prefix.end());
  seq.push_back(servo_to_relative(m_servo));
  const int k = static_cast<int>(seq.size());

  double pred = forward(params, seq);
  double resid = (pred - target_cm) / scale;

  double dpen[2 * kJointsPerAxis];
  double pen = range_penalty(m_servo, penalty_weight, grad_out.empty() ? nullptr : dpen);

  if (!grad_out.empty()) {
    if (grad_out.size() != 2 * kJointsPerAxis)
      throw std::invalid_argument("plan_objective: bad gradient size");
    std::array<double, 10> dpred = input_grad(params, seq, k - 1);  // cm per degree
    for (int j = 0; j < 2 * kJointsPerAxis; ++j)
      grad_out[j] = 2.0 * resid * dpred[j] / scale + dpen[j];
  }
  return resid * resid + pen;
}

PlanResult plan_sequence(const ModelParams& params, const PlanConfig& pcfg,
                         const TncConfig& tcfg) {
  pcfg.validate(params.config().label_scale_cm);
  tcfg.validate();
  if (pcfg.steps > params.config().max_len)
    throw std::invalid_argument("plan_sequence: steps exceed model max_len");

  const int dim = 2 * kJointsPerAxis;
  Rng perturb_rng(Rng::mix(pcfg.seed, stream::kPerturb));

  PlanResult result;
  result.sequence.reserve(pcfg.steps);
  std::vector<double> prev(dim, kServoNeutralDeg);

  for (int k = 0; k < pcfg.steps; ++k) {
    BoundedObjective obj;
    obj.lo.assign(dim, pcfg.bound_lo_deg);
    obj.hi.assign(dim, pcfg.bound_hi_deg);
    if (pcfg.freeze_pitch) {
      for (int j = kJointsPerAxis; j < dim; ++j) {
        obj.lo[j] = kServoNeutralDeg;
        obj.hi[j] = kServoNeutralDeg;
      }
    }
    std::span<const MotorCommand> prefix(result.sequence.data(), result.sequence.size());
    obj.eval = [&](std::span<const double> m) {
      return plan_objective(params, prefix, m, pcfg.target_height_cm, pcfg.penalty_weight);
    };
    obj.grad = [&](std::span<const double> m) {
      std::vector<double> g(dim, 0.0);
      plan_objective_grad(params, prefix, m, pcfg.target_height_cm, pcfg.penalty_weight, g);
      return g;
    };

    std::vector<double> start(dim);
    for (int j = 0; j < dim; ++j)
      start[j] = prev[j] + perturb_rng.uniform(-0.5, 0.5) * pcfg.perturb_scale_deg;

    TncResult tnc;
    try {
      tnc = minimize(obj, start, tcfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("plan_sequence: optimizer failed at tick " +
                               std::to_string(k) + ": " + e.what());
    }

    prev = tnc.x;
    MotorCommand cmd = clip_command(servo_to_relative(tnc.x));
    result.sequence.push_back(cmd);
    std::span<const MotorCommand> planned(result.sequence.data(), result.sequence.size());
    result.predicted_cm.push_back(forward(params, planned));
    result.objective.push_back(tnc.f);
  }
  return result;
}

EvalResult evaluate(const GaitOrSequence& plan_or_gait, const EnvConfig& env,
                    const TrialConfig& trial_cfg, const MagnetArrayConfig& array,
                    const CalibrationCurve& curve, int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("evaluate: n_trials must be >= 1");
  EvalResult res;
  res.mean_trace_cm.assign(trial_cfg.steps, 0.0);
  res.std_trace_cm.assign(trial_cfg.steps, 0.0);
  std::vector<std::vector<double>> traces;
  traces.reserve(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    TrialRecord record =
        run_trial(plan_or_gait, env, trial_cfg, array, curve, Rng::mix(seed, stream::kTrial, i));
    std::vector<double> trace(trial_cfg.steps);
    for (int k = 0; k < trial_cfg.steps; ++k) trace[k] = record.ticks[k].true_height_cm;
    res.final_heights_cm.push_back(trace.back());
    traces.push_back(std::move(trace));
  }
  for (int k = 0; k < trial_cfg.steps; ++k) {
    double sum = 0.0;
    for (const auto& tr : traces) sum += tr[k];
    double mean = sum / n_trials;
    double ss = 0.0;
    for (const auto& tr : traces) ss += (tr[k] - mean) * (tr[k] - mean);
    res.mean_trace_cm[k] = mean;
    res.std_trace_cm[k] = n_trials > 1 ? std::sqrt(ss / (n_trials - 1)) : 0.0;
  }
  return res;
}

RefineResult refine_policy(const ModelParams& params, const EnvConfig& env,
                           const TrialConfig& trial_cfg, const MagnetArrayConfig& array,
                           const CalibrationCurve& curve, TrainingSet& dataset,
                           const RefineConfig& rcfg, const PlanConfig& pcfg,
                           const TncConfig& tcfg, const TrainingConfig& tcfg_train) {
  if (rcfg.rounds < 1) throw std::invalid_argument("refine_policy: rounds must be >= 1");
  if (rcfg.finetune_epochs < 1)
    throw std::invalid_argument("refine_policy: finetune_epochs must be >= 1");

  RefineResult res;
  res.params = params;

  TrainingConfig ft = tcfg_train;
  ft.learning_rate = tcfg_train.learning_rate * rcfg.lr_scale;
  ft.epochs = rcfg.finetune_epochs;

  for (int round = 0; round < rcfg.rounds; ++round) {
    PlanConfig round_pcfg = pcfg;
    round_pcfg.seed = Rng::mix(pcfg.seed, static_cast<std::uint64_t>(round));
    PlanResult plan = plan_sequence(res.params, round_pcfg, tcfg);
    TrialRecord record = run_trial(plan.sequence, env, trial_cfg, array, curve,
                                   Rng::mix(pcfg.seed, stream::kTrial, round));
    res.final_heights_cm.push_back(record.ticks.back().true_height_cm);

    const std::size_t old_pairs = dataset.pairs.size();
    make_training_pairs(record, dataset);

    // fine-tune on the fresh pairs plus a seeded replay sample of the history
    std::vector<TrainingSet::PairRef> batch(dataset.pairs.begin() + old_pairs,
                                            dataset.pairs.end());
    Rng replay_rng(Rng::mix(pcfg.seed, stream::kReplay, round));
    for (int i = 0; i < rcfg.replay_pairs && old_pairs > 0; ++i) {
      std::size_t j = static_cast<std::size_t>(replay_rng.uniform() * old_pairs);
      if (j >= old_pairs) j = old_pairs - 1;
      batch.push_back(dataset.pairs[j]);
    }
    ft.seed = Rng::mix(tcfg_train.seed, static_cast<std::uint64_t>(round) + 1);
    train_in_place(res.params, dataset, batch, ft, nullptr);
  }
  return res;
}

}  // namespace burrow

#pragma once

#include <string>
#include <vector>

#include "burrow/config.hpp"
#include "burrow/dataset.hpp"

namespace burrow {

// Orchestration used by the CLI and the acceptance suite. Every step writes
// plain-text artifacts under out_dir and returns the paths it produced.

// Sweep sensor heights, fit the curve, write calibration_samples.csv and
// calibration.csv. Returns the fitted curve.
struct CalibrateOutcome {
  CalibrationCurve curve;
  std::vector<std::string> paths;
};
CalibrateOutcome run_calibrate(const RunConfig& cfg, const std::string& out_dir);

std::vector<std::string> run_collect(const RunConfig& cfg, const std::string& out_dir);

// Train on the corpus under out_dir (manifest.json); writes params.txt and
// training_loss.csv.
std::vector<std::string> run_train(const RunConfig& cfg, const std::string& out_dir);

// Plan with out_dir/params.txt; writes plan.csv.
std::vector<std::string> run_plan(const RunConfig& cfg, const std::string& out_dir);

// Evaluate one named class: "ml" (plan.csv), "random", "sinusoid", "greedy".
// Writes eval_<class>_trace.csv and eval_<class>_finals.csv.
std::vector<std::string> run_evaluate(const RunConfig& cfg, const std::string& out_dir,
                                      const std::string& class_name,
                                      const std::string& plan_path = "");

// Build report.csv and summary.csv from the eval_* files present in out_dir.
std::vector<std::string> run_report(const RunConfig& cfg, const std::string& out_dir);

// calibrate + collect + train + plan + evaluate all classes + report.
std::vector<std::string> run_pipeline(const RunConfig& cfg, const std::string& out_dir);

// shared helpers
EvalResult evaluate_class(const RunConfig& cfg, const std::string& class_name,
                          const std::vector<MotorCommand>* plan_sequence);
TrainingSet load_training_set(const RunConfig& cfg, const std::string& out_dir);

}  // namespace burrow

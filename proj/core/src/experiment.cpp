#include "burrow/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "burrow/rng.hpp"

namespace fs = std::filesystem;

namespace burrow {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void append_g9(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

GaitSpec baseline_gait(const RunConfig& cfg, const std::string& class_name) {
  GaitSpec g;
  if (class_name == "random") {
    g.kind = GaitSpec::Kind::kRandom;
    g.sigma_deg = cfg.evaluate.random_sigma_deg;
  } else if (class_name == "sinusoid") {
    g.kind = GaitSpec::Kind::kSinusoid;
    g.amplitude_deg = cfg.evaluate.sinusoid_amplitude_deg;
    g.frequency_hz = cfg.evaluate.frequency_hz;
    g.pitch_mode = PitchMode::kRandom;
  } else if (class_name == "greedy") {
    g.kind = GaitSpec::Kind::kGreedyEpsilon;
    g.epsilon = cfg.evaluate.greedy_epsilon;
    g.sigma_deg = cfg.evaluate.greedy_sigma_deg;
    g.amplitude_deg = cfg.evaluate.sinusoid_amplitude_deg;
    g.frequency_hz = cfg.evaluate.frequency_hz;
  } else {
    throw std::invalid_argument("unknown gait class '" + class_name + "'");
  }
  return g;
}

void write_eval_files(const EvalResult& eval, const std::string& class_name,
                      const std::string& out_dir, std::vector<std::string>& paths) {
  std::string trace = "tick,mean_cm,std_cm\n";
  for (std::size_t k = 0; k < eval.mean_trace_cm.size(); ++k) {
    trace += std::to_string(k);
    trace += ',';
    append_g9(trace, eval.mean_trace_cm[k]);
    trace += ',';
    append_g9(trace, eval.std_trace_cm[k]);
    trace += '\n';
  }
  std::string finals = "trial,final_cm\n";
  for (std::size_t i = 0; i < eval.final_heights_cm.size(); ++i) {
    finals += std::to_string(i);
    finals += ',';
    append_g9(finals, eval.final_heights_cm[i]);
    finals += '\n';
  }
  std::string trace_path = join(out_dir, "eval_" + class_name + "_trace.csv");
  std::string finals_path = join(out_dir, "eval_" + class_name + "_finals.csv");
  std::ofstream tf(trace_path, std::ios::binary);
  if (!tf) throw std::runtime_error("evaluate: cannot open " + trace_path);
  tf << trace;
  std::ofstream ff(finals_path, std::ios::binary);
  if (!ff) throw std::runtime_error("evaluate: cannot open " + finals_path);
  ff << finals;
  paths.push_back(trace_path);
  paths.push_back(finals_path);
}

EvalResult read_eval_files(const RunConfig& cfg, const std::string& out_dir,
                           const std::string& class_name) {
  EvalResult eval;
  std::string trace_path = join(out_dir, "eval_" + class_name + "_trace.csv");
  std::string finals_path = join(out_dir, "eval_" + class_name + "_finals.csv");
  std::ifstream tf(trace_path);
  if (!tf) throw std::runtime_error("report: missing " + trace_path);
  std::string line;
  std::getline(tf, line);
  while (std::getline(tf, line)) {
    if (line.empty()) continue;
    std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    eval.mean_trace_cm.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    eval.std_trace_cm.push_back(std::stod(line.substr(c2 + 1)));
  }
  std::ifstream ff(finals_path);
  if (!ff) throw std::runtime_error("report: missing " + finals_path);
  std::getline(ff, line);
  while (std::getline(ff, line)) {
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    eval.final_heights_cm.push_back(std::stod(line.substr(c1 + 1)));
  }
  if (eval.final_heights_cm.empty())
    throw std::runtime_error("report: no trials in " + finals_path);
  (void)cfg;
  return eval;
}

}  // namespace

EvalResult evaluate_class(const RunConfig& cfg, const std::string& class_name,
                          const std::vector<MotorCommand>* plan_sequence) {
  MagnetArrayConfig array = cfg.array;
  array.moment_am2 = array.moment();
  GaitOrSequence subject;
  std::uint64_t seed_salt;
  if (class_name == "ml") {
    if (!plan_sequence) throw std::invalid_argument("evaluate: ml class needs a plan");
    subject = *plan_sequence;
    seed_salt = 0x6d6c;
  } else {
    subject = baseline_gait(cfg, class_name);
    seed_salt = Rng::mix(0x62617365, std::hash<std::string>{}(class_name));
  }
  return evaluate(subject, cfg.env, cfg.trial, array, cfg.calibration, cfg.evaluate.n_trials,
                  Rng::mix(cfg.master_seed, seed_salt));
}

CalibrateOutcome run_calibrate(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  MagnetArrayConfig array = cfg.array;
  array.moment_am2 = array.moment();

  // sweep the apparatus through the height range and read the synthesized
  // sensor, mirroring the bench procedure the curve came from
  Rng noise(Rng::mix(cfg.master_seed, stream::kFieldNoise));
  Rng* noise_ptr = cfg.env.field_noise_ut > 0 ? &noise : nullptr;
  std::vector<std::pair<double, double>> samples;
  std::string csv = "height_mm,b_net_ut\n";
  for (int i = 0; i < cfg.calibrate.samples; ++i) {
    double frac = cfg.calibrate.samples == 1
                      ? 0.0
                      : static_cast<double>(i) / (cfg.calibrate.samples - 1);
    double h_mm = cfg.calibrate.min_height_mm +
                  frac * (cfg.calibrate.max_height_mm - cfg.calibrate.min_height_mm);
    FieldSample b = sensor_field(array, cfg.calibration, h_mm / 10.0, cfg.env, noise_ptr);
    double mag = net_magnitude(b);
    samples.emplace_back(h_mm, mag);
    append_g9(csv, h_mm);
    csv += ',';
    append_g9(csv, mag);
    csv += '\n';
  }
  CalibrateOutcome outcome;
  outcome.curve = fit_calibration(samples);

  std::string samples_path = join(out_dir, "calibration_samples.csv");
  std::ofstream sf(samples_path, std::ios::binary);
  if (!sf) throw std::runtime_error("calibrate: cannot open " + samples_path);
  sf << csv;

  std::string curve_path = join(out_dir, "calibration.csv");
  std::ofstream cf(curve_path, std::ios::binary);
  if (!cf) throw std::runtime_error("calibrate: cannot open " + curve_path);
  std::string curve_csv = "k_ut_mm\n";
  append_g9(curve_csv, outcome.curve.k_ut_mm);
  curve_csv += '\n';
  cf << curve_csv;

  outcome.paths = {samples_path, curve_path};
  return outcome;
}

std::vector<std::string> run_collect(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  collect(cfg, out_dir);
  return {join(out_dir, "manifest.json"), join(out_dir, "trials")};
}

TrainingSet load_training_set(const RunConfig& cfg, const std::string& out_dir) {
  DatasetManifest manifest = read_manifest(join(out_dir, "manifest.json"));
  TrainingSet set;
  for (const auto& entry : manifest.trials) {
    TrialRecord record = read_trial_csv(join(out_dir, entry.file));
    if (static_cast<int>(record.ticks.size()) != cfg.trial.steps)
      throw std::runtime_error("train: trial length mismatch in " + entry.file);
    make_training_pairs(record, set);
  }
  return set;
}

std::vector<std::string> run_train(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  TrainingSet set = load_training_set(cfg, out_dir);
  TrainingConfig tcfg = cfg.training;
  tcfg.seed = Rng::mix(cfg.master_seed, 0x747261696e);
  TrainResult result = train(set, cfg.model, tcfg);

  std::string params_path = join(out_dir, "params.txt");
  save_params(result.params, params_path);

  std::string loss_path = join(out_dir, "training_loss.csv");
  std::string csv = "epoch,mse\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    csv += std::to_string(e);
    csv += ',';
    append_g9(csv, result.epoch_loss[e]);
    csv += '\n';
  }
  std::ofstream lf(loss_path, std::ios::binary);
  if (!lf) throw std::runtime_error("train: cannot open " + loss_path);
  lf << csv;
  return {params_path, loss_path};
}

std::vector<std::string> run_plan(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ModelParams params = load_params(join(out_dir, "params.txt"));
  PlanConfig pcfg = cfg.plan;
  pcfg.steps = cfg.trial.steps;
  pcfg.seed = Rng::mix(cfg.master_seed, stream::kPerturb);
  PlanResult plan = plan_sequence(params, pcfg, cfg.tnc);
  std::string plan_path = join(out_dir, "plan.csv");
  write_plan_csv(plan, plan_path);
  return {plan_path};
}

std::vector<std::string> run_evaluate(const RunConfig& cfg, const std::string& out_dir,
                                      const std::string& class_name,
                                      const std::string& plan_path) {
  cfg.validate();
  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  if (class_name == "ml") {
    std::string path = plan_path.empty() ? join(out_dir, "plan.csv") : plan_path;
    std::vector<MotorCommand> plan = read_plan_csv(path);
    EvalResult eval = evaluate_class(cfg, class_name, &plan);
    write_eval_files(eval, class_name, out_dir, paths);
  } else {
    EvalResult eval = evaluate_class(cfg, class_name, nullptr);
    write_eval_files(eval, class_name, out_dir, paths);
  }
  return paths;
}

std::vector<std::string> run_report(const RunConfig& cfg, const std::string& out_dir) {
  std::vector<ClassResult> classes;
  for (const char* name : {"ml", "random", "sinusoid", "greedy"}) {
    if (fs::exists(join(out_dir, std::string("eval_") + name + "_trace.csv")))
      classes.push_back({name, read_eval_files(cfg, out_dir, name)});
  }
  ReportPaths paths = report(classes, cfg.plan.target_height_cm, cfg.evaluate.success_band_cm,
                             out_dir);
  return {paths.traces_csv, paths.summary_csv};
}

std::vector<std::string> run_pipeline(const RunConfig& cfg, const std::string& out_dir) {
  std::vector<std::string> all;
  auto add = [&](std::vector<std::string> paths) {
    for (auto& p : paths) all.push_back(std::move(p));
  };
  add(run_calibrate(cfg, out_dir).paths);
  add(run_collect(cfg, out_dir));
  add(run_train(cfg, out_dir));
  add(run_plan(cfg, out_dir));
  for (const char* name : {"ml", "random", "sinusoid", "greedy"})
    add(run_evaluate(cfg, out_dir, name));
  add(run_report(cfg, out_dir));
  return all;
}

}  // namespace burrow

#include "burrow/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "burrow/rng.hpp"

namespace fs = std::filesystem;

namespace burrow {

const char* kTrialCsvHeader =
    "tick,t_s,yaw0,yaw1,yaw2,yaw3,yaw4,pitch0,pitch1,pitch2,pitch3,pitch4,"
    "bh_x,bh_y,bh_z,bm_x,bm_y,bm_z,bt_x,bt_y,bt_z,"
    "est_head_cm,est_mid_cm,est_tail_cm,label_cm,true_cm";

namespace {

void append_g9(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

struct TrialSpec {
  GaitSpec gait;
  std::string gait_class;
};

// fixed corpus order: random block, sinusoid sweep, greedy sweep
std::vector<TrialSpec> corpus_specs(const CollectConfig& cc) {
  std::vector<TrialSpec> specs;
  for (int i = 0; i < cc.random_trials; ++i) {
    GaitSpec g;
    g.kind = GaitSpec::Kind::kRandom;
    g.sigma_deg = cc.random_sigma_deg;
    specs.push_back({g, "random"});
  }
  for (double amplitude : cc.sinusoid_amplitudes_deg)
    for (PitchMode pm : {PitchMode::kOff, PitchMode::kRandom})
      for (int i = 0; i < cc.sinusoid_seeds; ++i) {
        GaitSpec g;
        g.kind = GaitSpec::Kind::kSinusoid;
        g.amplitude_deg = amplitude;
        g.frequency_hz = cc.frequency_hz;
        g.pitch_mode = pm;
        specs.push_back({g, "sinusoid"});
      }
  for (double eps : cc.greedy_epsilons)
    for (double sigma : cc.greedy_sigmas_deg)
      for (int i = 0; i < cc.greedy_seeds; ++i) {
        GaitSpec g;
        g.kind = GaitSpec::Kind::kGreedyEpsilon;
        g.epsilon = eps;
        g.sigma_deg = sigma;
        g.amplitude_deg = 30.0;
        g.frequency_hz = cc.frequency_hz;
        specs.push_back({g, "greedy"});
      }
  return specs;
}

}  // namespace

void write_trial_csv(const TrialRecord& record, const std::string& path) {
  std::string out;
  out.reserve(record.ticks.size() * 360 + 256);
  out += kTrialCsvHeader;
  out += '\n';
  for (std::size_t k = 0; k < record.ticks.size(); ++k) {
    const TrialTick& tick = record.ticks[k];
    out += std::to_string(k);
    out += ',';
    append_g9(out, tick.t_s);
    for (int j = 0; j < 2 * kJointsPerAxis; ++j) {
      out += ',';
      append_g9(out, tick.command.at(j));
    }
    for (const FieldSample& f : tick.fields) {
      out += ',';
      append_g9(out, f.bx);
      out += ',';
      append_g9(out, f.by);
      out += ',';
      append_g9(out, f.bz);
    }
    for (double est : tick.est_heights_cm) {
      out += ',';
      append_g9(out, est);
    }
    out += ',';
    append_g9(out, tick.label_height_cm);
    out += ',';
    append_g9(out, tick.true_height_cm);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_trial_csv: cannot open " + path);
  f << out;
  if (!f) throw std::runtime_error("write_trial_csv: write failed for " + path);
}

TrialRecord read_trial_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trial_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTrialCsvHeader)
    throw std::runtime_error("read_trial_csv: bad header in " + path);
  TrialRecord record;
  double prev_t = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 26)
      throw std::runtime_error("read_trial_csv: bad row in " + path);
    TrialTick tick;
    int c = 1;  // cells[0] = tick index
    tick.t_s = std::stod(cells[c++]);
    for (int j = 0; j < 2 * kJointsPerAxis; ++j) tick.command.at(j) = std::stod(cells[c++]);
    for (int s = 0; s < 3; ++s) {
      tick.fields[s].bx = std::stod(cells[c++]);
      tick.fields[s].by = std::stod(cells[c++]);
      tick.fields[s].bz = std::stod(cells[c++]);
    }
    for (int s = 0; s < 3; ++s) tick.est_heights_cm[s] = std::stod(cells[c++]);
    tick.label_height_cm = std::stod(cells[c++]);
    tick.true_height_cm = std::stod(cells[c++]);
    if (!record.ticks.empty()) record.tick_s = tick.t_s - prev_t;
    prev_t = tick.t_s;
    record.ticks.push_back(tick);
  }
  if (record.ticks.empty()) throw std::runtime_error("read_trial_csv: empty trial " + path);
  return record;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::ordered_json j;
  j["root"] = manifest.root;
  j["master_seed"] = manifest.master_seed;
  j["trial_count"] = manifest.trial_count();
  j["command_samples"] = manifest.command_samples;
  j["sensor_readings"] = manifest.sensor_readings;
  j["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : manifest.trials)
    j["trials"].push_back({{"file", t.file}, {"class", t.gait_class}, {"seed", t.seed}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  DatasetManifest m;
  m.root = j.at("root").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.command_samples = j.at("command_samples").get<long>();
  m.sensor_readings = j.at("sensor_readings").get<long>();
  for (const auto& t : j.at("trials")) {
    m.trials.push_back({t.at("file").get<std::string>(), t.at("class").get<std::string>(),
                        t.at("seed").get<std::uint64_t>()});
  }
  if (static_cast<int>(m.trials.size()) != j.at("trial_count").get<int>())
    throw std::runtime_error("read_manifest: trial_count mismatch in " + path);
  return m;
}

DatasetManifest collect(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto specs = corpus_specs(cfg.collect);
  const int n = static_cast<int>(specs.size());

  fs::path trials_dir = fs::path(out_dir) / "trials";
  fs::create_directories(trials_dir);

  // resolve the default moment once for all workers
  MagnetArrayConfig array = cfg.array;
  array.moment_am2 = array.moment();

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.master_seed = cfg.master_seed;
  manifest.trials.resize(n);
  manifest.command_samples = static_cast<long>(n) * cfg.trial.steps;
  manifest.sensor_readings = manifest.command_samples * 3;

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        std::uint64_t seed = Rng::mix(cfg.master_seed, stream::kTrial, i);
        TrialRecord record = run_trial(specs[i].gait, cfg.env, cfg.trial, array,
                                       cfg.calibration, seed);
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%03d.csv", i);
        write_trial_csv(record, (trials_dir / name).string());
        manifest.trials[i] = {std::string("trials/") + name, specs[i].gait_class, seed};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  int workers = std::max(1, static_cast<int>(std::min<unsigned>(hw ? hw : 1, 8)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) {
    fs::remove_all(trials_dir);  // no partial corpus on abort
    throw std::runtime_error("collect: " + first_error);
  }

  write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

ReportPaths report(const std::vector<ClassResult>& classes, double target_cm, double band_cm,
                   const std::string& out_dir) {
  if (classes.empty()) throw std::invalid_argument("report: need at least one class");
  fs::create_directories(out_dir);
  ReportPaths paths;
  paths.traces_csv = (fs::path(out_dir) / "report.csv").string();
  paths.summary_csv = (fs::path(out_dir) / "summary.csv").string();

  std::string traces = "tick,class,mean_height_cm,std_height_cm\n";
  for (const auto& cls : classes) {
    for (std::size_t k = 0; k < cls.eval.mean_trace_cm.size(); ++k) {
      traces += std::to_string(k);
      traces += ',';
      traces += cls.name;
      traces += ',';
      append_g9(traces, cls.eval.mean_trace_cm[k]);
      traces += ',';
      append_g9(traces, cls.eval.std_trace_cm[k]);
      traces += '\n';
    }
  }
  std::ofstream tf(paths.traces_csv, std::ios::binary);
  if (!tf) throw std::runtime_error("report: cannot open " + paths.traces_csv);
  tf << traces;

  std::string summary = "class,trials,mean_final_cm,std_final_cm,success_count\n";
  for (const auto& cls : classes) {
    const auto& finals = cls.eval.final_heights_cm;
    double mean = 0.0;
    for (double f : finals) mean += f;
    mean /= static_cast<double>(finals.size());
    double ss = 0.0;
    for (double f : finals) ss += (f - mean) * (f - mean);
    double sd = finals.size() > 1 ? std::sqrt(ss / (finals.size() - 1)) : 0.0;
    int successes = 0;
    for (double f : finals)
      if (std::abs(f - target_cm) <= band_cm) ++successes;
    summary += cls.name;
    summary += ',';
    summary += std::to_string(finals.size());
    summary += ',';
    append_g9(summary, mean);
    summary += ',';
    append_g9(summary, sd);
    summary += ',';
    summary += std::to_string(successes);
    summary += '\n';
  }
  std::ofstream sf(paths.summary_csv, std::ios::binary);
  if (!sf) throw std::runtime_error("report: cannot open " + paths.summary_csv);
  sf << summary;
  return paths;
}

void write_plan_csv(const PlanResult& plan, const std::string& path) {
  std::string out = "tick,yaw0,yaw1,yaw2,yaw3,yaw4,pitch0,pitch1,pitch2,pitch3,pitch4,"
                    "predicted_height_cm\n";
  for (std::size_t k = 0; k < plan.sequence.size(); ++k) {
    out += std::to_string(k);
    for (int j = 0; j < 2 * kJointsPerAxis; ++j) {
      out += ',';
      append_g9(out, plan.sequence[k].at(j));
    }
    out += ',';
    append_g9(out, plan.predicted_cm[k]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_plan_csv: cannot open " + path);
  f << out;
}

std::vector<MotorCommand> read_plan_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_plan_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("tick,yaw0", 0) != 0)
    throw std::runtime_error("read_plan_csv: bad header in " + path);
  std::vector<MotorCommand> plan;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 12) throw std::runtime_error("read_plan_csv: bad row in " + path);
    MotorCommand cmd;
    for (int j = 0; j < 2 * kJointsPerAxis; ++j) cmd.at(j) = std::stod(cells[1 + j]);
    plan.push_back(cmd);
  }
  if (plan.empty()) throw std::runtime_error("read_plan_csv: empty plan " + path);
  return plan;
}

}  // namespace burrow

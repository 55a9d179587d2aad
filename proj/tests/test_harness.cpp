#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "burrow/config.hpp"
#include "burrow/dataset.hpp"
#include "burrow/experiment.hpp"

using namespace burrow;
namespace fs = std::filesystem;

namespace {

// tiny corpus for fast end-to-end checks: 2 + 2 + 2 = 6 trials, 12 steps
RunConfig small_cfg() {
  RunConfig cfg;
  cfg.trial.steps = 12;
  cfg.plan.steps = 12;
  cfg.model.max_len = 12;
  cfg.model.conv_channels = 4;
  cfg.model.lstm_hidden = 6;
  cfg.training.epochs = 1;
  cfg.collect.random_trials = 2;
  cfg.collect.sinusoid_amplitudes_deg = {30.0};
  cfg.collect.sinusoid_seeds = 1;  // x2 pitch modes = 2 trials
  cfg.collect.greedy_epsilons = {0.5};
  cfg.collect.greedy_sigmas_deg = {30.0};
  cfg.collect.greedy_seeds = 2;
  cfg.evaluate.n_trials = 2;
  cfg.calibrate.samples = 40;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config roundtrips through the text format") {
  RunConfig cfg;
  cfg.master_seed = 42;
  cfg.env.descent_gain_cm = 0.77;
  cfg.collect.greedy_epsilons = {0.25, 0.75};
  std::string text = serialize_config(cfg);
  RunConfig back = parse_config(text, "inline");
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("default config matches the documented defaults") {
  TempDir dir("burrow_cfg_default");
  std::string path = (dir.path / "default.cfg").string();
  save_config(RunConfig{}, path);
  RunConfig loaded = load_config(path);
  CHECK(loaded == RunConfig{});
  CHECK(loaded.trial.steps == 130);
  CHECK(loaded.trial.tick_s == 0.39);
  CHECK(loaded.calibration.k_ut_mm == 8333.0);
  CHECK(loaded.collect.total_trials() == 270);
  CHECK(loaded.plan.target_height_cm == 15.0);
}

TEST_CASE("config parse errors carry line numbers and reject unknown keys") {
  SUBCASE("unknown key") {
    bool threw = false;
    try {
      parse_config("[env]\nsurface_height_cm = 40\nbogus_key = 3\n", "t");
    } catch (const std::invalid_argument& e) {
      threw = true;
      CHECK(std::string(e.what()).find("t:3") != std::string::npos);
      CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    CHECK(threw);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(parse_config("[warp_drive]\nx = 1\n", "t"), std::invalid_argument);
  }
  SUBCASE("key outside a section") {
    CHECK_THROWS_AS(parse_config("surface_height_cm = 40\n", "t"), std::invalid_argument);
  }
  SUBCASE("bad value") {
    CHECK_THROWS_AS(parse_config("[env]\nsurface_height_cm = forty\n", "t"),
                    std::invalid_argument);
  }
  SUBCASE("negative gain fails validation") {
    CHECK_THROWS_AS(parse_config("[env]\ndescent_gain_cm = -1\n", "t"), std::invalid_argument);
  }
}

TEST_CASE("trial CSV roundtrips and has the pinned schema") {
  RunConfig cfg = small_cfg();
  MagnetArrayConfig array = cfg.array;
  array.moment_am2 = array.moment();
  GaitSpec gait;
  gait.kind = GaitSpec::Kind::kGreedyEpsilon;
  TrialRecord rec = run_trial(gait, cfg.env, cfg.trial, array, cfg.calibration, 17);

  TempDir dir("burrow_trial_csv");
  std::string path = (dir.path / "trial.csv").string();
  write_trial_csv(rec, path);

  std::string text = slurp(path);
  CHECK(text.rfind("tick,t_s,yaw0,yaw1,yaw2,yaw3,yaw4,"
                   "pitch0,pitch1,pitch2,pitch3,pitch4,"
                   "bh_x,bh_y,bh_z,bm_x,bm_y,bm_z,bt_x,bt_y,bt_z,"
                   "est_head_cm,est_mid_cm,est_tail_cm,label_cm,true_cm\n",
                   0) == 0);
  CHECK(text.find("\r") == std::string::npos);

  TrialRecord back = read_trial_csv(path);
  REQUIRE(back.ticks.size() == rec.ticks.size());
  for (std::size_t k = 0; k < rec.ticks.size(); ++k) {
    CHECK(back.ticks[k].label_height_cm ==
          doctest::Approx(rec.ticks[k].label_height_cm).epsilon(1e-8));
    CHECK(back.ticks[k].command.at(3) == doctest::Approx(rec.ticks[k].command.at(3)).epsilon(1e-8));
  }
}

TEST_CASE("collect writes the corpus, manifest counts match, reruns are byte-identical") {
  RunConfig cfg = small_cfg();
  cfg.master_seed = 11;
  TempDir dir_a("burrow_collect_a");
  TempDir dir_b("burrow_collect_b");

  DatasetManifest m = collect(cfg, dir_a.path.string());
  CHECK(m.trial_count() == cfg.collect.total_trials());
  CHECK(m.command_samples == m.trial_count() * cfg.trial.steps);
  CHECK(m.sensor_readings == m.command_samples * 3);

  int files = 0;
  for (auto& e : fs::directory_iterator(dir_a.path / "trials")) {
    ++files;
    std::ifstream in(e.path());
    int rows = -1;  // header
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == cfg.trial.steps);
  }
  CHECK(files == m.trial_count());

  DatasetManifest m2 = read_manifest((dir_a.path / "manifest.json").string());
  CHECK(m2.trial_count() == m.trial_count());
  CHECK(m2.master_seed == 11);

  collect(cfg, dir_b.path.string());
  for (const auto& t : m.trials)
    CHECK(slurp((dir_a.path / t.file).string()) == slurp((dir_b.path / t.file).string()));
}

TEST_CASE("report emits traces and a summary with success counts") {
  ClassResult ml{"ml", {}};
  ml.eval.final_heights_cm = {15.2, 14.9, 15.4};
  ml.eval.mean_trace_cm = {40.0, 30.0, 15.1};
  ml.eval.std_trace_cm = {0.0, 0.1, 0.2};
  ClassResult rnd{"random", {}};
  rnd.eval.final_heights_cm = {31.0};
  rnd.eval.mean_trace_cm = {40.0, 35.0, 31.0};
  rnd.eval.std_trace_cm = {0.0, 0.0, 0.0};

  TempDir dir("burrow_report");
  ReportPaths paths = report({ml, rnd}, 15.0, 1.0, dir.path.string());

  std::string summary = slurp(paths.summary_csv);
  CHECK(summary.rfind("class,trials,mean_final_cm,std_final_cm,success_count\n", 0) == 0);
  // one row per class plus the header
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  CHECK(summary.find("ml,3,") != std::string::npos);
  CHECK(summary.find(",3\n") != std::string::npos);   // all three ml trials in band
  CHECK(summary.find("random,1,") != std::string::npos);

  std::string traces = slurp(paths.traces_csv);
  CHECK(traces.rfind("tick,class,mean_height_cm,std_height_cm\n", 0) == 0);
  // single-trial class reports a zero std column
  CHECK(traces.find("2,random,31,0\n") != std::string::npos);

  CHECK_THROWS_AS(report({}, 15.0, 1.0, dir.path.string()), std::invalid_argument);
}

TEST_CASE("plan CSV roundtrips") {
  PlanResult plan;
  plan.sequence.resize(4);
  plan.predicted_cm = {30.0, 25.0, 20.0, 15.0};
  plan.objective = {0.1, 0.05, 0.01, 0.0};
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 10; ++j) plan.sequence[k].at(j) = k * 10.0 + j - 50.0;

  TempDir dir("burrow_plan_csv");
  std::string path = (dir.path / "plan.csv").string();
  write_plan_csv(plan, path);
  auto back = read_plan_csv(path);
  REQUIRE(back.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(back[k] == plan.sequence[k]);
}

TEST_CASE("calibrate sweep recovers the shipped curve constant") {
  RunConfig cfg = small_cfg();
  cfg.calibrate.samples = 120;
  TempDir dir("burrow_calibrate");
  CalibrateOutcome outcome = run_calibrate(cfg, dir.path.string());
  // field noise is on: 2% band around the true constant
  CHECK(std::abs(outcome.curve.k_ut_mm - 8333.0) / 8333.0 < 0.02);
  std::string samples = slurp((dir.path / "calibration_samples.csv").string());
  CHECK(samples.rfind("height_mm,b_net_ut\n", 0) == 0);
  std::string curve = slurp((dir.path / "calibration.csv").string());
  CHECK(curve.rfind("k_ut_mm\n", 0) == 0);
}

TEST_CASE("end-to-end small pipeline produces every artifact") {
  RunConfig cfg = small_cfg();
  cfg.master_seed = 5;
  cfg.tnc.max_outer = 5;
  TempDir dir("burrow_pipeline_small");
  auto paths = run_pipeline(cfg, dir.path.string());
  CHECK(paths.size() >= 10);
  for (const char* f :
       {"calibration.csv", "manifest.json", "params.txt", "training_loss.csv", "plan.csv",
        "eval_ml_trace.csv", "eval_random_finals.csv", "eval_sinusoid_trace.csv",
        "eval_greedy_finals.csv", "report.csv", "summary.csv"})
    CHECK(fs::exists(dir.path / f));

  // the report covers all four classes
  std::string summary = slurp((dir.path / "summary.csv").string());
  for (const char* cls : {"ml,", "random,", "sinusoid,", "greedy,"})
    CHECK(summary.find(cls) != std::string::npos);
}

#pragma once

#include <string>
#include <vector>

#include "burrow/config.hpp"
#include "burrow/planner.hpp"
#include "burrow/simenv.hpp"

namespace burrow {

// Trial CSV schema (bit-exact, 9 significant digits, LF endings):
//   tick,t_s,yaw0..yaw4,pitch0..pitch4,
//   bh_x,bh_y,bh_z,bm_x,bm_y,bm_z,bt_x,bt_y,bt_z,
//   est_head_cm,est_mid_cm,est_tail_cm,label_cm,true_cm
extern const char* kTrialCsvHeader;

void write_trial_csv(const TrialRecord& record, const std::string& path);
TrialRecord read_trial_csv(const std::string& path);

struct ManifestEntry {
  std::string file;        // relative to the manifest directory
  std::string gait_class;  // random | sinusoid | greedy
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::string root;
  std::uint64_t master_seed = 0;
  std::vector<ManifestEntry> trials;
  long command_samples = 0;   // trials * steps
  long sensor_readings = 0;   // trials * steps * 3

  int trial_count() const { return static_cast<int>(trials.size()); }
};

// Generate the full training corpus under out_dir/trials, one CSV per trial
// plus manifest.json. Byte-deterministic for a given master seed; trials fan
// out across worker threads with per-trial derived seeds.
DatasetManifest collect(const RunConfig& cfg, const std::string& out_dir);

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

struct ClassResult {
  std::string name;
  EvalResult eval;
};

struct ReportPaths {
  std::string traces_csv;
  std::string summary_csv;
};

// Per-class per-tick mean/std traces plus a final-height summary table with
// success counts at |final - target| <= band.
ReportPaths report(const std::vector<ClassResult>& classes, double target_cm, double band_cm,
                   const std::string& out_dir);

void write_plan_csv(const PlanResult& plan, const std::string& path);
std::vector<MotorCommand> read_plan_csv(const std::string& path);

}  // namespace burrow

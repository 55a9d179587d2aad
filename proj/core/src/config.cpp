#include "burrow/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace burrow {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

void parse_into(const std::string& s, double& out) {
  std::size_t pos = 0;
  out = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
}
void parse_into(const std::string& s, int& out) {
  std::size_t pos = 0;
  out = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
}
void parse_into(const std::string& s, std::uint64_t& out) {
  std::size_t pos = 0;
  out = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
}
void parse_into(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v;
    parse_into(item, v);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
}

struct Entry {
  const char* section;
  const char* key;
  const char* doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Entry entry(const char* section, const char* key, const char* doc, Access access) {
  return Entry{
      section, key, doc,
      [access](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); },
      [access](RunConfig& c, const std::string& s) { parse_into(s, access(c)); }};
}

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = {
      entry("run", "master_seed", "root seed for every derived stream",
            [](RunConfig& c) -> std::uint64_t& { return c.master_seed; }),

      entry("env", "surface_height_cm", "start height of the body above the base",
            [](RunConfig& c) -> double& { return c.env.surface_height_cm; }),
      entry("env", "descent_gain_cm", "max descent per tick at full coherent activity",
            [](RunConfig& c) -> double& { return c.env.descent_gain_cm; }),
      entry("env", "activity_ref_deg", "per-joint yaw speed (deg/tick) that saturates activity",
            [](RunConfig& c) -> double& { return c.env.activity_ref_deg; }),
      entry("env", "boundary_scale_cm", "boundary layer thickness above the base",
            [](RunConfig& c) -> double& { return c.env.boundary_scale_cm; }),
      entry("env", "boundary_strength", "descent attenuation at the base, 0..1",
            [](RunConfig& c) -> double& { return c.env.boundary_strength; }),
      entry("env", "rise_gain_cm", "max upward drift per tick from erratic pitch motion",
            [](RunConfig& c) -> double& { return c.env.rise_gain_cm; }),
      entry("env", "erratic_ref_deg", "per-joint pitch speed (deg/tick) that saturates erraticness",
            [](RunConfig& c) -> double& { return c.env.erratic_ref_deg; }),
      entry("env", "height_noise_cm", "process noise scale; modulated by activity",
            [](RunConfig& c) -> double& { return c.env.height_noise_cm; }),
      entry("env", "noise_floor", "idle fraction of height_noise_cm",
            [](RunConfig& c) -> double& { return c.env.noise_floor; }),
      entry("env", "field_noise_ut", "per-axis magnetometer noise, microtesla",
            [](RunConfig& c) -> double& { return c.env.field_noise_ut; }),
      entry("env", "link_length_cm", "body link length for the pitch chain",
            [](RunConfig& c) -> double& { return c.env.link_length_cm; }),
      entry("env", "bin_x_cm", "test bin length",
            [](RunConfig& c) -> double& { return c.env.bin_cm[0]; }),
      entry("env", "bin_y_cm", "test bin width",
            [](RunConfig& c) -> double& { return c.env.bin_cm[1]; }),
      entry("env", "bin_z_cm", "test bin depth",
            [](RunConfig& c) -> double& { return c.env.bin_cm[2]; }),

      entry("trial", "steps", "commands per trial",
            [](RunConfig& c) -> int& { return c.trial.steps; }),
      entry("trial", "tick_s", "control period, seconds",
            [](RunConfig& c) -> double& { return c.trial.tick_s; }),

      entry("array", "pitch_x_mm", "horizontal magnet spacing d1",
            [](RunConfig& c) -> double& { return c.array.pitch_x_mm; }),
      entry("array", "pitch_y_mm", "vertical magnet spacing d2",
            [](RunConfig& c) -> double& { return c.array.pitch_y_mm; }),
      entry("array", "extent_x_mm", "array footprint along x",
            [](RunConfig& c) -> double& { return c.array.extent_x_mm; }),
      entry("array", "extent_y_mm", "array footprint along y",
            [](RunConfig& c) -> double& { return c.array.extent_y_mm; }),
      entry("array", "magnet_l_mm", "bar magnet length (recorded, not modeled)",
            [](RunConfig& c) -> double& { return c.array.magnet_dims_mm[0]; }),
      entry("array", "magnet_w_mm", "bar magnet width (recorded, not modeled)",
            [](RunConfig& c) -> double& { return c.array.magnet_dims_mm[1]; }),
      entry("array", "magnet_t_mm", "bar magnet thickness (recorded, not modeled)",
            [](RunConfig& c) -> double& { return c.array.magnet_dims_mm[2]; }),
      entry("array", "moment_am2", "per-magnet dipole moment; 0 = calibrate to 83.33 uT at 100 mm",
            [](RunConfig& c) -> double& { return c.array.moment_am2; }),
      entry("array", "ambient_x_ut", "constant ambient field offset, x",
            [](RunConfig& c) -> double& { return c.array.ambient_ut.bx; }),
      entry("array", "ambient_y_ut", "constant ambient field offset, y",
            [](RunConfig& c) -> double& { return c.array.ambient_ut.by; }),
      entry("array", "ambient_z_ut", "constant ambient field offset, z",
            [](RunConfig& c) -> double& { return c.array.ambient_ut.bz; }),

      entry("calibration", "k_ut_mm", "height model constant: H_mm = k / ||B||_uT",
            [](RunConfig& c) -> double& { return c.calibration.k_ut_mm; }),

      entry("calibrate", "min_height_mm", "calibration sweep lower bound",
            [](RunConfig& c) -> double& { return c.calibrate.min_height_mm; }),
      entry("calibrate", "max_height_mm", "calibration sweep upper bound",
            [](RunConfig& c) -> double& { return c.calibrate.max_height_mm; }),
      entry("calibrate", "samples", "number of sweep points",
            [](RunConfig& c) -> int& { return c.calibrate.samples; }),

      entry("model", "max_len", "maximum prefix length, ticks",
            [](RunConfig& c) -> int& { return c.model.max_len; }),
      entry("model", "conv_channels", "1D convolution output channels",
            [](RunConfig& c) -> int& { return c.model.conv_channels; }),
      entry("model", "kernel", "convolution kernel width (odd, zero-padded same)",
            [](RunConfig& c) -> int& { return c.model.kernel; }),
      entry("model", "pool", "max-pool window and stride",
            [](RunConfig& c) -> int& { return c.model.pool; }),
      entry("model", "dropout_p", "dropout probability on pooled activations",
            [](RunConfig& c) -> double& { return c.model.dropout_p; }),
      entry("model", "lstm_layers", "stacked LSTM layers",
            [](RunConfig& c) -> int& { return c.model.lstm_layers; }),
      entry("model", "lstm_hidden", "LSTM hidden width",
            [](RunConfig& c) -> int& { return c.model.lstm_hidden; }),

      entry("training", "learning_rate", "adaptive-moment step size",
            [](RunConfig& c) -> double& { return c.training.learning_rate; }),
      entry("training", "epochs", "passes over the training pairs",
            [](RunConfig& c) -> int& { return c.training.epochs; }),
      entry("training", "batch", "mini-batch size",
            [](RunConfig& c) -> int& { return c.training.batch; }),
      entry("training", "beta1", "first-moment decay",
            [](RunConfig& c) -> double& { return c.training.beta1; }),
      entry("training", "beta2", "second-moment decay",
            [](RunConfig& c) -> double& { return c.training.beta2; }),
      entry("training", "eps", "denominator guard",
            [](RunConfig& c) -> double& { return c.training.eps; }),

      entry("plan", "target_height_cm", "commanded burrow depth above the base",
            [](RunConfig& c) -> double& { return c.plan.target_height_cm; }),
      entry("plan", "perturb_scale_deg", "warm-start perturbation scale",
            [](RunConfig& c) -> double& { return c.plan.perturb_scale_deg; }),
      entry("plan", "penalty_weight", "range-penalty weight per squared degree",
            [](RunConfig& c) -> double& { return c.plan.penalty_weight; }),
      entry("plan", "freeze_pitch", "1 = pin pitch joints at neutral while planning",
            [](RunConfig& c) -> int& { return c.plan.freeze_pitch; }),

      entry("tnc", "max_outer", "outer Newton iteration cap",
            [](RunConfig& c) -> int& { return c.tnc.max_outer; }),
      entry("tnc", "max_cg", "CG iteration cap; 0 = 2 * dimension",
            [](RunConfig& c) -> int& { return c.tnc.max_cg; }),
      entry("tnc", "grad_tol", "projected-gradient norm stop",
            [](RunConfig& c) -> double& { return c.tnc.grad_tol; }),
      entry("tnc", "armijo_c1", "sufficient-decrease constant",
            [](RunConfig& c) -> double& { return c.tnc.armijo_c1; }),
      entry("tnc", "backtrack", "step shrink factor, (0,1)",
            [](RunConfig& c) -> double& { return c.tnc.backtrack; }),
      entry("tnc", "max_backtracks", "line search evaluation cap",
            [](RunConfig& c) -> int& { return c.tnc.max_backtracks; }),
      entry("tnc", "hvp_step", "finite-difference step for Hessian-vector products",
            [](RunConfig& c) -> double& { return c.tnc.hvp_step; }),
      entry("tnc", "curvature_tol", "non-positive-curvature exit threshold",
            [](RunConfig& c) -> double& { return c.tnc.curvature_tol; }),

      entry("collect", "random_trials", "trials in the random group",
            [](RunConfig& c) -> int& { return c.collect.random_trials; }),
      entry("collect", "random_sigma_deg", "random group angle std dev",
            [](RunConfig& c) -> double& { return c.collect.random_sigma_deg; }),
      entry("collect", "sinusoid_amplitudes_deg", "sinusoid amplitude sweep, comma separated",
            [](RunConfig& c) -> std::vector<double>& { return c.collect.sinusoid_amplitudes_deg; }),
      entry("collect", "sinusoid_seeds", "trials per (amplitude, pitch mode) cell",
            [](RunConfig& c) -> int& { return c.collect.sinusoid_seeds; }),
      entry("collect", "greedy_epsilons", "exploration sweep, comma separated",
            [](RunConfig& c) -> std::vector<double>& { return c.collect.greedy_epsilons; }),
      entry("collect", "greedy_sigmas_deg", "exploration std dev sweep, comma separated",
            [](RunConfig& c) -> std::vector<double>& { return c.collect.greedy_sigmas_deg; }),
      entry("collect", "greedy_seeds", "trials per (epsilon, sigma) cell",
            [](RunConfig& c) -> int& { return c.collect.greedy_seeds; }),
      entry("collect", "frequency_hz", "sinusoid frequency for all waveform gaits",
            [](RunConfig& c) -> double& { return c.collect.frequency_hz; }),

      entry("evaluate", "n_trials", "rollouts per class",
            [](RunConfig& c) -> int& { return c.evaluate.n_trials; }),
      entry("evaluate", "random_sigma_deg", "random baseline std dev",
            [](RunConfig& c) -> double& { return c.evaluate.random_sigma_deg; }),
      entry("evaluate", "sinusoid_amplitude_deg", "sinusoid baseline amplitude",
            [](RunConfig& c) -> double& { return c.evaluate.sinusoid_amplitude_deg; }),
      entry("evaluate", "frequency_hz", "baseline waveform frequency",
            [](RunConfig& c) -> double& { return c.evaluate.frequency_hz; }),
      entry("evaluate", "greedy_epsilon", "greedy baseline exploration probability",
            [](RunConfig& c) -> double& { return c.evaluate.greedy_epsilon; }),
      entry("evaluate", "greedy_sigma_deg", "greedy baseline exploration std dev",
            [](RunConfig& c) -> double& { return c.evaluate.greedy_sigma_deg; }),
      entry("evaluate", "success_band_cm", "success = |final - target| within this band",
            [](RunConfig& c) -> double& { return c.evaluate.success_band_cm; }),
  };
  return entries;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& msg) {
  throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

int CollectConfig::total_trials() const {
  return random_trials +
         static_cast<int>(sinusoid_amplitudes_deg.size()) * 2 * sinusoid_seeds +
         static_cast<int>(greedy_epsilons.size()) * static_cast<int>(greedy_sigmas_deg.size()) *
             greedy_seeds;
}

void CollectConfig::validate() const {
  if (random_trials < 0 || sinusoid_seeds < 0 || greedy_seeds < 0)
    throw std::invalid_argument("CollectConfig: counts must be >= 0");
  if (!(random_sigma_deg >= 0)) throw std::invalid_argument("CollectConfig: bad sigma");
  if (!(frequency_hz > 0)) throw std::invalid_argument("CollectConfig: frequency must be > 0");
  for (double a : sinusoid_amplitudes_deg)
    if (a < 0) throw std::invalid_argument("CollectConfig: amplitudes must be >= 0");
  for (double e : greedy_epsilons)
    if (e < 0 || e > 1) throw std::invalid_argument("CollectConfig: epsilons must be in [0,1]");
  for (double s : greedy_sigmas_deg)
    if (s < 0) throw std::invalid_argument("CollectConfig: sigmas must be >= 0");
  if (total_trials() < 1) throw std::invalid_argument("CollectConfig: no trials configured");
}

void EvaluateConfig::validate() const {
  if (n_trials < 1) throw std::invalid_argument("EvaluateConfig: n_trials must be >= 1");
  if (!(frequency_hz > 0)) throw std::invalid_argument("EvaluateConfig: frequency must be > 0");
  if (greedy_epsilon < 0 || greedy_epsilon > 1)
    throw std::invalid_argument("EvaluateConfig: epsilon must be in [0,1]");
  if (!(success_band_cm > 0))
    throw std::invalid_argument("EvaluateConfig: success_band_cm must be > 0");
}

void CalibrateConfig::validate() const {
  if (!(min_height_mm > 0) || !(max_height_mm > min_height_mm))
    throw std::invalid_argument("CalibrateConfig: need 0 < min < max height");
  if (samples < 1) throw std::invalid_argument("CalibrateConfig: samples must be >= 1");
}

void RunConfig::validate() const {
  env.validate();
  trial.validate();
  array.validate();
  calibration.validate();
  calibrate.validate();
  model.validate();
  training.validate();
  plan.validate(env.surface_height_cm);
  tnc.validate();
  collect.validate();
  evaluate.validate();
  if (trial.steps > model.max_len)
    throw std::invalid_argument("RunConfig: trial steps exceed model max_len");
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& e : schema()) {
    if (section != e.section) {
      if (!section.empty()) out += "\n";
      section = e.section;
      out += "[" + section + "]\n";
    }
    out += std::string("# ") + e.doc + "\n";
    out += std::string(e.key) + " = " + e.get(cfg) + "\n";
  }
  return out;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_config: cannot open " + path);
  out << serialize_config(cfg);
  if (!out) throw std::runtime_error("save_config: write failed for " + path);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(origin, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& e : schema()) known = known || section == e.section;
      if (!known) parse_fail(origin, lineno, "unknown section '" + section + "'");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) parse_fail(origin, lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) parse_fail(origin, lineno, "key outside any [section]");
    const Entry* found = nullptr;
    for (const auto& e : schema())
      if (section == e.section && key == e.key) found = &e;
    if (!found)
      parse_fail(origin, lineno, "unknown key '" + key + "' in section [" + section + "]");
    try {
      found->set(cfg, value);
    } catch (const std::exception&) {
      parse_fail(origin, lineno, "bad value '" + value + "' for key '" + key + "'");
    }
  }
  // the model predicts heights scaled by the environment's surface height
  cfg.model.label_scale_cm = cfg.env.surface_height_cm;
  cfg.plan.steps = cfg.trial.steps;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("load_config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace burrow

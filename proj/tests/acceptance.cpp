// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-5 are self-contained; 6 runs the full pipeline into a
// scratch directory; 7 checks the emitted plan; 8 runs the refinement loop on
// the trained model. Heavy stages print progress to stderr.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "burrow/config.hpp"
#include "burrow/dataset.hpp"
#include "burrow/experiment.hpp"
#include "burrow/rng.hpp"

using namespace burrow;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double elapsed(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* spec, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), spec, a, b, c);
  return buf;
}

// ---- criterion 1: calibration fit ------------------------------------------

void criterion1() {
  auto t0 = clk::now();
  const double k = 8333.0;

  std::vector<std::pair<double, double>> clean;
  for (int i = 0; i < 100; ++i) {
    double h = 15.0 + 4.2 * i;
    clean.emplace_back(h, k / h);
  }
  double clean_rel = std::abs(fit_calibration(clean).k_ut_mm - k) / k;

  Rng rng(20240811);
  std::vector<std::pair<double, double>> noisy;
  for (int i = 0; i < 200; ++i) {
    double h = rng.uniform(20.0, 450.0);
    noisy.emplace_back(h, (k / h) * (1.0 + rng.normal(0.0, 0.01)));
  }
  double noisy_rel = std::abs(fit_calibration(noisy).k_ut_mm - k) / k;

  double secs = elapsed(t0);
  verdict(1, clean_rel < 1e-9 && noisy_rel < 0.02 && secs < 1.0,
          fmt("calibration fit: clean rel err %.2e (<1e-9), 1%%-noise rel err %.4f (<0.02), "
              "%.2f s (<1)",
              clean_rel, noisy_rel, secs));
}

// ---- criterion 2: field model ----------------------------------------------

void criterion2() {
  auto t0 = clk::now();

  // superposition: a 3x2 grid equals the sum of its dipoles
  MagnetArrayConfig grid;
  grid.pitch_x_mm = 29.0;
  grid.pitch_y_mm = 23.0;
  grid.extent_x_mm = 60.0;  // 3 columns
  grid.extent_y_mm = 23.0;  // 2 rows
  grid.moment_am2 = 1.4;
  std::array<double, 3> probe{17.0, -9.0, 65.0};
  FieldSample whole = field_at(grid, probe);
  FieldSample acc{};
  const int nx = grid.count_x(), ny = grid.count_y();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      FieldSample f = dipole_field(grid.moment_am2,
                                   {(i - 0.5 * (nx - 1)) * grid.pitch_x_mm,
                                    (j - 0.5 * (ny - 1)) * grid.pitch_y_mm, 0.0},
                                   probe);
      acc.bx += f.bx;
      acc.by += f.by;
      acc.bz += f.bz;
    }
  double sup_rel = std::max({std::abs(whole.bx - acc.bx), std::abs(whole.by - acc.by),
                             std::abs(whole.bz - acc.bz)}) /
                   net_magnitude(whole);

  // axial symmetry above the center of the full default array
  MagnetArrayConfig full;
  full.moment_am2 = 1.0;
  FieldSample axial = field_at(full, {0.0, 0.0, 120.0});
  double axial_rel =
      std::max(std::abs(axial.bx), std::abs(axial.by)) / std::abs(axial.bz);

  // single dipole on axis vs closed form mu0 m/(2 pi z^3) = 2e8 m / z_mm^3
  MagnetArrayConfig one;
  one.pitch_x_mm = one.pitch_y_mm = 1000.0;
  one.extent_x_mm = one.extent_y_mm = 500.0;
  one.moment_am2 = 1.9;
  double worst_dipole = 0.0;
  for (double z : {25.0, 60.0, 100.0, 333.0}) {
    double expected = 2e8 * one.moment_am2 / (z * z * z);
    double got = field_at(one, {0.0, 0.0, z}).bz;
    worst_dipole = std::max(worst_dipole, std::abs(got - expected) / expected);
  }

  double secs = elapsed(t0);
  verdict(2, sup_rel < 1e-9 && axial_rel < 1e-9 && worst_dipole < 1e-12 && secs < 1.0,
          fmt("field model: superposition %.1e (<1e-9), axial %.1e (<1e-9), "
              "axial-dipole closed form %.1e (<1e-12)",
              sup_rel, axial_rel, worst_dipole));
}

// ---- criterion 3: gradient checks ------------------------------------------

void criterion3() {
  auto t0 = clk::now();
  ModelConfig cfg;
  cfg.max_len = 8;
  cfg.conv_channels = 3;
  cfg.lstm_hidden = 4;
  cfg.lstm_layers = 2;
  ModelParams params = ModelParams::random_init(cfg, 17);

  TrainingSet set;
  for (int t = 0; t < 2; ++t) {
    TrialRecord rec;
    Rng rng(Rng::mix(5, t));
    rec.ticks.resize(8);
    double h = 40.0;
    for (int k = 0; k < 8; ++k) {
      for (int j = 0; j < 10; ++j) rec.ticks[k].command.at(j) = rng.uniform(-90.0, 90.0);
      h -= 0.3 * rng.uniform();
      rec.ticks[k].label_height_cm = h;
    }
    make_training_pairs(rec, set);
  }
  std::vector<TrainingSet::PairRef> batch = {set.pairs[2], set.pairs[7], set.pairs[12]};
  auto loss = [&](const ModelParams& p) {
    double acc = 0.0;
    for (const auto& pr : batch) {
      double err = (forward(p, set.prefix(pr)) - set.label(pr)) / cfg.label_scale_cm;
      acc += err * err;
    }
    return acc / static_cast<double>(batch.size());
  };

  const double h = 1e-5, atol = 1e-10;
  std::vector<double> grad = param_grad(params, set, batch);
  Rng pick(31337);
  int checked = 0;
  double worst_param = 0.0;
  while (checked < 200) {
    std::size_t i = static_cast<std::size_t>(pick.uniform() * grad.size());
    if (i >= grad.size()) continue;
    ModelParams plus = params, minus = params;
    plus.flat()[i] += h;
    minus.flat()[i] -= h;
    double fd = (loss(plus) - loss(minus)) / (2.0 * h);
    worst_param = std::max(worst_param, std::max(0.0, std::abs(fd - grad[i]) - atol) /
                                            (std::abs(fd) + std::abs(grad[i]) + atol));
    ++checked;
  }

  auto prefix_span = set.prefix(set.pairs[6]);
  std::vector<MotorCommand> prefix(prefix_span.begin(), prefix_span.end());
  double worst_input = 0.0;
  int input_checked = 0;
  for (int tick = 0; tick < static_cast<int>(prefix.size()); ++tick) {
    auto g = input_grad(params, prefix, tick);
    for (int j = 0; j < 10; ++j) {
      auto plus = prefix, minus = prefix;
      plus[tick].at(j) += h;
      minus[tick].at(j) -= h;
      double fd = (forward(params, plus) - forward(params, minus)) / (2.0 * h);
      worst_input = std::max(worst_input, std::max(0.0, std::abs(fd - g[j]) - atol) /
                                              (std::abs(fd) + std::abs(g[j]) + atol));
      ++input_checked;
    }
  }

  double secs = elapsed(t0);
  verdict(3,
          worst_param < 1e-4 && worst_input < 1e-4 && checked + input_checked >= 200 &&
              secs < 30.0,
          fmt("gradients vs central differences: %d coords, worst param %.2e, worst input "
              "%.2e (<1e-4)",
              static_cast<double>(checked + input_checked), worst_param, worst_input));
}

// ---- criterion 4: optimizer oracles ----------------------------------------

void criterion4() {
  auto t0 = clk::now();
  TncConfig tcfg;

  // box-constrained diagonal quadratic vs the projected analytic minimizer
  std::vector<double> d{1.0, 2.0, 0.5, 4.0, 3.0};
  std::vector<double> c{9.0, -7.0, 0.25, 2.0, -4.5};
  BoundedObjective quad;
  quad.lo.assign(5, -3.0);
  quad.hi.assign(5, 3.0);
  quad.eval = [&](std::span<const double> x) {
    double f = 0.0;
    for (int i = 0; i < 5; ++i) f += d[i] * (x[i] - c[i]) * (x[i] - c[i]);
    return f;
  };
  quad.grad = [&](std::span<const double> x) {
    std::vector<double> g(5);
    for (int i = 0; i < 5; ++i) g[i] = 2.0 * d[i] * (x[i] - c[i]);
    return g;
  };
  TncResult qres = minimize(quad, std::vector<double>(5, 0.0), tcfg);
  double quad_err = 0.0;
  for (int i = 0; i < 5; ++i)
    quad_err = std::max(quad_err, std::abs(qres.x[i] - std::clamp(c[i], -3.0, 3.0)));
  bool quad_monotone = true;
  for (std::size_t i = 1; i < qres.trace.size(); ++i)
    quad_monotone = quad_monotone && qres.trace[i] <= qres.trace[i - 1] + 1e-15;

  // Rosenbrock from the classic start
  BoundedObjective rosen;
  rosen.lo = {-5.0, -5.0};
  rosen.hi = {5.0, 5.0};
  rosen.eval = [](std::span<const double> x) {
    double a = x[1] - x[0] * x[0], b = 1.0 - x[0];
    return 100.0 * a * a + b * b;
  };
  rosen.grad = [](std::span<const double> x) {
    double a = x[1] - x[0] * x[0];
    return std::vector<double>{-400.0 * a * x[0] - 2.0 * (1.0 - x[0]), 200.0 * a};
  };
  TncConfig rcfg;
  rcfg.max_outer = 200;
  TncResult rres = minimize(rosen, std::vector<double>{-1.2, 1.0}, rcfg);
  bool rosen_monotone = true;
  for (std::size_t i = 1; i < rres.trace.size(); ++i)
    rosen_monotone = rosen_monotone && rres.trace[i] <= rres.trace[i - 1] + 1e-15;

  double secs = elapsed(t0);
  verdict(4,
          quad_err < 1e-6 && rres.f < 1e-6 && rres.outer_iters <= 200 && quad_monotone &&
              rosen_monotone && secs < 5.0,
          fmt("optimizer: box quadratic err %.1e (<1e-6), Rosenbrock f %.1e (<1e-6) in %g "
              "outer iters, traces monotone",
              quad_err, rres.f, static_cast<double>(rres.outer_iters)));
}

// ---- criteria 5-8: protocol, pipeline, constraints, refinement --------------

struct PipelineArtifacts {
  RunConfig cfg;
  std::string dir;
  double collect_secs = 0.0;
};

void criterion5(PipelineArtifacts& art) {
  auto t0 = clk::now();
  const std::string dir_a = art.dir;
  const std::string dir_b = art.dir + "_rerun";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  DatasetManifest m = collect(art.cfg, dir_a);
  bool counts_ok = m.trial_count() == 270 && m.command_samples == 270L * 130 &&
                   m.sensor_readings == 270L * 130 * 3;

  bool rows_ok = true, spacing_ok = true;
  for (int i = 0; i < m.trial_count() && rows_ok; i += 27) {
    TrialRecord rec = read_trial_csv((fs::path(dir_a) / m.trials[i].file).string());
    rows_ok = rows_ok && rec.ticks.size() == 130;
    for (std::size_t k = 0; k < rec.ticks.size(); ++k)
      spacing_ok = spacing_ok && std::abs(rec.ticks[k].t_s - 0.39 * k) < 1e-9;
  }

  collect(art.cfg, dir_b);
  bool identical = true;
  for (const auto& t : m.trials) {
    std::ifstream fa(fs::path(dir_a) / t.file, std::ios::binary);
    std::ifstream fb(fs::path(dir_b) / t.file, std::ios::binary);
    std::string a((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string b((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    if (a != b || a.empty()) {
      identical = false;
      break;
    }
  }
  fs::remove_all(dir_b);
  art.collect_secs = elapsed(t0);

  double secs = elapsed(t0);
  verdict(5, counts_ok && rows_ok && spacing_ok && identical && secs < 120.0,
          fmt("dataset protocol: 270 trials x 130 rows at 0.39 s spacing, rerun "
              "byte-identical, %.1f s (<120)",
              secs));
}

void criterion6(PipelineArtifacts& art) {
  auto t0 = clk::now();
  std::fprintf(stderr, "[acceptance] pipeline: train...\n");
  run_train(art.cfg, art.dir);
  std::fprintf(stderr, "[acceptance] pipeline: plan... (%.0f s)\n", elapsed(t0));
  run_plan(art.cfg, art.dir);
  std::fprintf(stderr, "[acceptance] pipeline: evaluate... (%.0f s)\n", elapsed(t0));
  for (const char* name : {"ml", "random", "sinusoid", "greedy"})
    run_evaluate(art.cfg, art.dir, name);
  run_calibrate(art.cfg, art.dir);
  run_report(art.cfg, art.dir);
  double secs = elapsed(t0);

  auto finals = [&](const char* cls) {
    std::vector<double> v;
    std::ifstream in(fs::path(art.dir) / (std::string("eval_") + cls + "_finals.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) v.push_back(std::stod(line.substr(line.find(',') + 1)));
    return v;
  };
  auto successes = [&](const std::vector<double>& v) {
    int n = 0;
    for (double f : v)
      if (std::abs(f - 15.0) <= 1.0) ++n;
    return n;
  };
  auto sdev = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double f : v) mean += f;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double f : v) ss += (f - mean) * (f - mean);
    return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
  };

  auto ml = finals("ml"), rnd = finals("random"), sin = finals("sinusoid"),
       greedy = finals("greedy");
  bool shapes = ml.size() == 10 && rnd.size() == 10 && sin.size() == 10 && greedy.size() == 10;
  int ml_succ = successes(ml);
  int rnd_succ = successes(rnd), sin_succ = successes(sin), greedy_succ = successes(greedy);
  double ml_sd = sdev(ml);
  bool sd_ok = ml_sd < sdev(rnd) && ml_sd < sdev(sin) && ml_sd < sdev(greedy);

  // the corpus generation from criterion 5 counts against the same budget
  double total = secs + art.collect_secs;
  verdict(6,
          shapes && ml_succ >= 9 && rnd_succ <= 2 && sin_succ <= 2 && greedy_succ <= 2 &&
              sd_ok && total < 900.0,
          fmt("pipeline: ml %g/10 in band (>=9), baselines %.0f", double(ml_succ),
              double(rnd_succ)) +
              fmt("/%g/%g in band (<=2 each), ", double(sin_succ), double(greedy_succ)) +
              fmt("ml sd %.3f < baseline sds (%.3f min), ", ml_sd,
                  std::min({sdev(rnd), sdev(sin), sdev(greedy)})) +
              fmt("%.0f s (<900)", total));
}

void criterion7(PipelineArtifacts& art) {
  std::vector<MotorCommand> plan = read_plan_csv((fs::path(art.dir) / "plan.csv").string());
  bool count_ok = plan.size() == 130;
  int in_range = 0;
  double penalty = 0.0;
  for (const auto& cmd : plan)
    for (int j = 0; j < 10; ++j) {
      if (std::abs(cmd.at(j)) <= 120.0) ++in_range;
      double over = std::abs(cmd.at(j)) - 120.0;
      if (over > 0) penalty += art.cfg.plan.penalty_weight * over * over;
    }
  verdict(7, count_ok && in_range == 1300 && penalty == 0.0,
          fmt("constraints: %g/1300 planned angles within [-120,120], penalty %.1e (=0)",
              static_cast<double>(in_range), penalty));
}

void criterion8(PipelineArtifacts& art) {
  auto t0 = clk::now();
  ModelParams params = load_params((fs::path(art.dir) / "params.txt").string());
  TrainingSet base = load_training_set(art.cfg, art.dir);

  MagnetArrayConfig array = art.cfg.array;
  array.moment_am2 = array.moment();

  RefineConfig rcfg;  // 5 rounds, 5 fine-tune epochs at lr/10
  PlanConfig pcfg = art.cfg.plan;
  pcfg.steps = art.cfg.trial.steps;
  TrainingConfig tr = art.cfg.training;

  double early = 0.0, late = 0.0;
  const int n_seeds = 5;
  for (int s = 0; s < n_seeds; ++s) {
    std::fprintf(stderr, "[acceptance] refine seed %d... (%.0f s)\n", s, elapsed(t0));
    TrainingSet dataset = base;  // fresh copy per master seed
    pcfg.seed = Rng::mix(1000 + s, stream::kPerturb);
    tr.seed = Rng::mix(1000 + s, 0x66696e65);
    RefineResult res = refine_policy(params, art.cfg.env, art.cfg.trial, array,
                                     art.cfg.calibration, dataset, rcfg, pcfg, art.cfg.tnc, tr);
    for (int r = 0; r < 2; ++r) early += std::abs(res.final_heights_cm[r] - 15.0);
    for (int r = 2; r < 5; ++r) late += std::abs(res.final_heights_cm[r] - 15.0);
  }
  early /= 2.0 * n_seeds;
  late /= 3.0 * n_seeds;

  double secs = elapsed(t0);
  verdict(8, late <= early && secs < 1200.0,
          fmt("refinement: mean |final-target| rounds 3-5 = %.3f <= rounds 1-2 = %.3f, "
              "%.0f s (<1200)",
              late, early, secs));
}

}  // namespace

int main() {
  auto t0 = clk::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();

  PipelineArtifacts art;
  art.cfg.master_seed = 7;
  art.cfg.validate();
  art.dir = (fs::temp_directory_path() / "burrow_acceptance_run").string();
  criterion5(art);
  criterion6(art);
  criterion7(art);
  criterion8(art);

  std::printf("%s: %d/8 criteria passed (%.0f s total)\n", g_failures == 0 ? "OK" : "FAILED",
              8 - g_failures, elapsed(t0));
  return g_failures == 0 ? 0 : 1;
}

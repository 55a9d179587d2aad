// Command-line front end for the burrowing pipeline:
//   burrow pipeline --config default.cfg --seed 7 --out run1
// Subcommands: calibrate, collect, train, plan, evaluate, report, pipeline.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "burrow/config.hpp"
#include "burrow/experiment.hpp"

namespace {

void print_paths(const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cout << p << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gait-sequence burrowing toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "experiment config file (defaults when omitted)")
      ->expected(1);
  app.add_option("--out", out_dir, "output directory")->expected(1);
  auto* seed_opt = app.add_option("--seed", seed, "override the config master seed");

  auto* cmd_calibrate = app.add_subcommand("calibrate", "fit the field-to-height curve");
  auto* cmd_collect = app.add_subcommand("collect", "generate the training corpus");
  auto* cmd_train = app.add_subcommand("train", "train the depth predictor on a corpus");
  auto* cmd_plan = app.add_subcommand("plan", "plan a burrowing sequence with trained params");
  auto* cmd_evaluate = app.add_subcommand("evaluate", "roll out a plan or gait class");
  auto* cmd_report = app.add_subcommand("report", "summarize evaluation results");
  auto* cmd_pipeline = app.add_subcommand("pipeline", "run every stage end to end");
  auto* cmd_defaults =
      app.add_subcommand("write-config", "write the default config to --out/default.cfg");

  std::string eval_plan_path;
  std::string eval_gait;
  cmd_evaluate->add_option("--plan", eval_plan_path, "plan CSV to execute");
  cmd_evaluate->add_option("--gait", eval_gait, "baseline class: random | sinusoid | greedy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  seed_given = seed_opt->count() > 0;

  try {
    burrow::RunConfig cfg;
    if (!config_path.empty()) {
      if (!std::filesystem::exists(config_path)) {
        std::cerr << "error: config file not found: " << config_path << "\n";
        return 1;
      }
      cfg = burrow::load_config(config_path);
    } else {
      cfg.validate();
    }
    if (seed_given) cfg.master_seed = seed;

    if (cmd_calibrate->parsed()) {
      print_paths(burrow::run_calibrate(cfg, out_dir).paths);
    } else if (cmd_collect->parsed()) {
      print_paths(burrow::run_collect(cfg, out_dir));
    } else if (cmd_train->parsed()) {
      print_paths(burrow::run_train(cfg, out_dir));
    } else if (cmd_plan->parsed()) {
      print_paths(burrow::run_plan(cfg, out_dir));
    } else if (cmd_evaluate->parsed()) {
      if (eval_plan_path.empty() == eval_gait.empty()) {
        std::cerr << "error: evaluate needs exactly one of --plan or --gait\n";
        return 1;
      }
      if (!eval_plan_path.empty()) {
        print_paths(burrow::run_evaluate(cfg, out_dir, "ml", eval_plan_path));
      } else {
        print_paths(burrow::run_evaluate(cfg, out_dir, eval_gait));
      }
    } else if (cmd_report->parsed()) {
      print_paths(burrow::run_report(cfg, out_dir));
    } else if (cmd_pipeline->parsed()) {
      print_paths(burrow::run_pipeline(cfg, out_dir));
    } else if (cmd_defaults->parsed()) {
      std::filesystem::create_directories(out_dir);
      std::string path = (std::filesystem::path(out_dir) / "default.cfg").string();
      burrow::save_config(cfg, path);
      print_paths({path});
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

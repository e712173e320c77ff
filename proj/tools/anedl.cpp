#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anedl/cli.hpp"
#include "anedl/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Evidential open-set semi-supervised learning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "Run configuration file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out_dir, "Directory for outputs (default: current directory)");
  config_opt->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("generate", "Sample the synthetic dataset and write it to disk");

  std::size_t top_o = 0;
  auto* train = app.add_subcommand("train", "Run two-stage training; writes log and checkpoint");
  auto* topo_opt = train->add_option("--top-O", top_o, "Override the inlier selection budget");

  std::string checkpoint;
  std::size_t top_m = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint path (default: from config)");
  eval->add_option("--M", top_m, "Top-M evidence metric parameter");

  std::size_t jobs = 1;
  auto* ablate = app.add_subcommand("ablate", "Run the component ablation grid, 3 seeds per cell");
  ablate->add_option("--jobs", jobs, "Parallel worker threads");
  auto* ablate_topo_opt =
      ablate->add_option("--top-O", top_o, "Override the inlier selection budget");

  std::vector<std::size_t> top_m_values;
  auto* sweep = app.add_subcommand("sweep", "Evaluate a checkpoint across several M values");
  sweep->add_option("--checkpoint", checkpoint, "Checkpoint path (default: from config)");
  sweep->add_option("--M", top_m_values, "M values to sweep (default: 1, K/4, K/2, K)");

  for (auto* sub : {gen, train, eval, ablate, sweep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    anedl::RunConfig cfg =
        config_path.empty() ? anedl::RunConfig{} : anedl::load_run_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (topo_opt->count() > 0 || ablate_topo_opt->count() > 0) cfg.train.top_o = top_o;

    if (gen->parsed()) {
      anedl::cli::cmd_generate(cfg, out_dir);
    } else if (train->parsed()) {
      anedl::cli::cmd_train(cfg, out_dir);
    } else if (eval->parsed()) {
      anedl::cli::cmd_eval(cfg, out_dir, checkpoint, top_m);
    } else if (ablate->parsed()) {
      anedl::cli::cmd_ablate(cfg, out_dir, jobs);
    } else if (sweep->parsed()) {
      anedl::cli::cmd_sweep(cfg, out_dir, top_m_values, checkpoint);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

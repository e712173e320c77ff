#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anedl/config.hpp"

// Command implementations behind the executable, kept as library functions so
// the whole surface is testable without spawning processes. File paths from
// the config are resolved against out_dir unless absolute.

namespace anedl::cli {

struct GenerateSummary {
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t test = 0;
};

GenerateSummary cmd_generate(const RunConfig& cfg, const std::string& out_dir);

struct TrainSummary {
  double final_auroc = 0.0;
  double final_error_rate = 0.0;
  std::string log_path;
  std::string checkpoint_path;
};

TrainSummary cmd_train(const RunConfig& cfg, const std::string& out_dir);

struct EvalSummary {
  std::size_t top_m = 0;
  double auroc = 0.0;
  double error_rate = 0.0;
};

// top_m 0 falls back to the config's metric.top_m (which itself may mean
// ceil(K/2)); checkpoint_path empty falls back to the config path.
EvalSummary cmd_eval(const RunConfig& cfg, const std::string& out_dir,
                     const std::string& checkpoint_path = "", std::size_t top_m = 0);

std::vector<EvalSummary> cmd_sweep(const RunConfig& cfg, const std::string& out_dir,
                                   std::vector<std::size_t> top_m_values = {},
                                   const std::string& checkpoint_path = "");

struct AblationRow {
  std::size_t cell = 0;
  std::string ano;        // full | no_adaptive | neither
  std::string kl;         // original | strengthened_p100 | strengthened_p200
  std::string selection;  // calibrated | top_m
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
  double error_mean = 0.0;
  double error_std = 0.0;
};

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::string& out_dir,
                                    std::size_t jobs = 1);

std::string resolve_path(const std::string& out_dir, const std::string& path);

}  // namespace anedl::cli

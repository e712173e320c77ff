#pragma once

#include <cstdint>
#include <string>

#include "anedl/data.hpp"
#include "anedl/losses.hpp"
#include "anedl/network.hpp"
#include "anedl/training.hpp"

// One structured config file drives every experiment. Parsing is strict:
// unknown keys are errors (a typo that silently falls back to a default can
// invalidate a whole ablation), every other field has a documented default,
// and parse -> serialize -> parse is the identity.

namespace anedl {

struct MetricConfig {
  std::size_t top_m = 0;  // inference metric M; 0 means ceil(K/2)
};

struct PathsConfig {
  std::string dataset = "dataset.jsonl";
  std::string truth = "dataset_truth.jsonl";
  std::string log = "train_log.jsonl";
  std::string checkpoint = "checkpoint.json";
  std::string eval = "eval.json";
  std::string sweep = "sweep.json";
  std::string ablation = "ablation.csv";
  std::string ablation_cells = "ablation_cells";  // directory of per-cell config dumps
};

struct RunConfig {
  std::uint64_t seed = 7;
  GenSpec data = GenSpec::defaults();
  ModelConfig model;      // num_classes / input_dim always come from data
  SgdConfig optimizer;    // total_steps is derived by training
  LossWeights loss;
  TrainConfig train;      // its weights/optimizer/augment/seed mirror the sections above
  MetricConfig metric;
  PathsConfig paths;

  // Copies the cross-cutting sections into the nested configs and resolves
  // sentinel defaults (top_o = 0 becomes half the unlabeled pool).
  ModelConfig resolved_model() const;
  TrainConfig resolved_train() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);  // canonical, exhaustive
void write_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace anedl

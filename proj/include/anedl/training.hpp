#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anedl/data.hpp"
#include "anedl/losses.hpp"
#include "anedl/network.hpp"

namespace anedl {

// How unlabeled samples are ranked when picking the inlier subset for the
// FixMatch term: "calibrated" reads the concentration at the classifier's
// argmax, "top_m" uses the same top-m evidence mass as inference.
enum class SelectionMetric { calibrated, top_m };

struct SelectionResult {
  std::vector<std::size_t> indices;  // ascending, size min(top_o, pool)
  std::vector<double> metric;        // one entry per pool sample
};

SelectionResult select_inliers(const TwoHeadModel& model,
                               const std::vector<std::vector<double>>& unlabeled,
                               std::size_t top_o, SelectionMetric metric,
                               std::size_t top_m = 0);

// 0 for either top-m parameter means "half the classes, rounded up".
std::size_t resolve_top_m(std::size_t requested, std::size_t num_classes);

struct TrainConfig {
  std::size_t epochs_pretrain = 10;  // stage one: no FixMatch, no selection
  std::size_t epochs_total = 40;
  std::size_t steps_per_epoch = 64;
  std::size_t batch_labeled = 64;
  std::size_t batch_unlabeled = 128;
  std::size_t top_o = 0;  // 0 means half the unlabeled pool
  SelectionMetric selection_metric = SelectionMetric::calibrated;
  std::size_t selection_top_m = 0;
  std::size_t report_top_m = 0;  // inference metric for the per-epoch test AUROC
  LossWeights weights;
  SgdConfig optimizer;  // total_steps is derived, not read
  AugmentConfig augment;
  bool record_steps = false;
  std::uint64_t seed = 7;

  void validate() const;  // throws std::invalid_argument
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double learning_rate = 0.0;
  AnedlTerms terms;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  int stage = 1;
  double learning_rate = 0.0;  // at epoch start
  AnedlTerms mean_terms;       // averaged over the epoch's steps
  std::size_t selection_size = 0;
  double test_auroc = 0.0;       // NaN when the test split lacks a class
  double test_error_rate = 0.0;  // over test inliers; NaN when there are none
};

struct RunReport {
  std::vector<EpochReport> epochs;
  std::vector<StepRecord> steps;  // only when record_steps
};

struct TrainResult {
  RunReport report;
  TwoHeadModel model;
  SgdOptimizer optimizer;
  std::string rng_state;  // augmentation stream at finish
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Two-stage run: epochs 1..epochs_pretrain train without the FixMatch term,
// later epochs re-select the top-O inlier candidates before each epoch and
// add FixMatch on them. Deterministic for a fixed config and seed.
TrainResult train(const OpenSetDataset& data, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct TestEvaluation {
  double auroc = 0.0;
  double error_rate = 0.0;
  std::vector<double> scores;          // aligned with the test split
  std::vector<std::size_t> predicted;  // argmax of the classifier head
};

TestEvaluation evaluate_test(const TwoHeadModel& model, const std::vector<TestSample>& test,
                             std::size_t top_m);

}  // namespace anedl

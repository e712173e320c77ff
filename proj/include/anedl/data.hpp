#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Synthetic open-set benchmark: isotropic Gaussian inlier classes plus
// Gaussian outlier clusters. Training code only ever sees OpenSetDataset;
// the inlier/outlier truth of the unlabeled pool travels separately so no
// training path can touch it.

namespace anedl {

struct GaussianCluster {
  std::vector<double> mean;
  double stddev = 1.0;
};

struct AugmentConfig {
  double sigma_weak = 0.05;
  double sigma_strong = 0.25;
  double drop_prob = 0.1;  // per-coordinate zeroing, strong branch only
};

struct GenSpec {
  std::size_t dim = 2;
  std::vector<GaussianCluster> inlier_clusters;   // one per class
  std::vector<GaussianCluster> outlier_clusters;
  std::size_t labeled_per_class = 50;
  std::size_t unlabeled_total = 2000;
  double outlier_fraction = 0.3;
  std::size_t test_inliers = 200;
  std::size_t test_outliers = 200;
  double min_outlier_separation = 2.0;  // against every inlier mean
  AugmentConfig augment;

  static GenSpec defaults();
  void validate() const;  // throws std::invalid_argument
};

struct LabeledSample {
  std::vector<double> x;
  std::size_t label = 0;
};

struct TestSample {
  std::vector<double> x;
  bool inlier = false;
  std::size_t label = 0;  // class if inlier, outlier cluster index otherwise
};

struct OpenSetDataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<LabeledSample> labeled;
  std::vector<std::vector<double>> unlabeled;  // truth withheld
  std::vector<TestSample> test;
};

struct HiddenLabel {
  bool inlier = false;
  std::size_t label = 0;
};

struct GeneratedData {
  OpenSetDataset dataset;
  std::vector<HiddenLabel> unlabeled_truth;  // parallel to dataset.unlabeled
};

GeneratedData generate(const GenSpec& spec, std::uint64_t seed);

enum class AugmentStrength { weak, strong };

std::vector<double> augment(const std::vector<double>& x, AugmentStrength strength,
                            const AugmentConfig& cfg, std::mt19937_64& rng);

// JSONL persistence: one meta line then one record per sample in the main
// file; the unlabeled truth goes to a separate sidecar file. Loading them is
// split into two functions so a training path holding only the main file can
// never reach the truth. Output bytes are identical across calls for the
// same data.
void save_dataset(const std::string& path, const std::string& truth_path,
                  const GeneratedData& data);
OpenSetDataset load_dataset(const std::string& path);
std::vector<HiddenLabel> load_truth(const std::string& truth_path);

}  // namespace anedl

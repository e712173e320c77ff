#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "anedl/data.hpp"

using namespace anedl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("generation spec validation") {
  CHECK_NOTHROW(GenSpec::defaults().validate());

  GenSpec bad = GenSpec::defaults();
  bad.inlier_clusters.pop_back();
  bad.inlier_clusters.pop_back();
  bad.inlier_clusters.pop_back();  // one class left
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = GenSpec::defaults();
  bad.outlier_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = GenSpec::defaults();
  bad.inlier_clusters[0].mean = {0.0};  // wrong dimension
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // An outlier mean closer than the required separation to an inlier mean.
  bad = GenSpec::defaults();
  bad.outlier_clusters[0].mean = {-2.0, -1.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // Outliers requested but nowhere to draw them from.
  bad = GenSpec::defaults();
  bad.outlier_clusters.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.outlier_fraction = 0.0;
  bad.test_outliers = 0;
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("generated split sizes and class balance") {
  const GenSpec spec = GenSpec::defaults();
  const GeneratedData data = generate(spec, 17);
  const OpenSetDataset& ds = data.dataset;

  CHECK(ds.dim == 2);
  CHECK(ds.num_classes == 4);
  CHECK(ds.labeled.size() == 200);    // 50 per class, 4 classes
  CHECK(ds.unlabeled.size() == 2000);
  CHECK(ds.test.size() == 400);
  CHECK(data.unlabeled_truth.size() == ds.unlabeled.size());

  std::vector<std::size_t> per_class(ds.num_classes, 0);
  for (const auto& s : ds.labeled) {
    REQUIRE(s.label < ds.num_classes);
    REQUIRE(s.x.size() == ds.dim);
    ++per_class[s.label];
  }
  for (std::size_t c : per_class) CHECK(c == 50);

  std::size_t unlabeled_outliers = 0;
  for (const auto& t : data.unlabeled_truth)
    if (!t.inlier) ++unlabeled_outliers;
  CHECK(unlabeled_outliers == 600);  // 30% of 2000, rounded

  std::size_t test_in = 0, test_out = 0;
  for (const auto& t : ds.test) (t.inlier ? test_in : test_out)++;
  CHECK(test_in == 200);
  CHECK(test_out == 200);
}

TEST_CASE("outliers are interleaved through the unlabeled pool") {
  const GeneratedData data = generate(GenSpec::defaults(), 21);
  // A shuffled pool should not keep all outliers in one contiguous block.
  std::size_t first_out = data.unlabeled_truth.size(), last_out = 0;
  for (std::size_t i = 0; i < data.unlabeled_truth.size(); ++i)
    if (!data.unlabeled_truth[i].inlier) {
      first_out = std::min(first_out, i);
      last_out = std::max(last_out, i);
    }
  CHECK(last_out - first_out > 600);
}

TEST_CASE("generation is deterministic in the seed") {
  const GenSpec spec = GenSpec::defaults();
  const GeneratedData a = generate(spec, 99), b = generate(spec, 99), c = generate(spec, 100);
  CHECK(a.dataset.unlabeled == b.dataset.unlabeled);
  CHECK(a.dataset.unlabeled != c.dataset.unlabeled);
  CHECK(a.dataset.labeled.size() == b.dataset.labeled.size());
  for (std::size_t i = 0; i < a.dataset.labeled.size(); ++i) {
    CHECK(a.dataset.labeled[i].x == b.dataset.labeled[i].x);
    CHECK(a.dataset.labeled[i].label == b.dataset.labeled[i].label);
  }
}

TEST_CASE("closed-set generation works when outliers are disabled") {
  GenSpec spec = GenSpec::defaults();
  spec.outlier_clusters.clear();
  spec.outlier_fraction = 0.0;
  spec.test_outliers = 0;
  const GeneratedData data = generate(spec, 5);
  for (const auto& t : data.unlabeled_truth) CHECK(t.inlier);
  for (const auto& t : data.dataset.test) CHECK(t.inlier);
}

TEST_CASE("labeled samples cluster around their class means") {
  const GenSpec spec = GenSpec::defaults();
  const GeneratedData data = generate(spec, 31);
  for (const auto& s : data.dataset.labeled) {
    const auto& mean = spec.inlier_clusters[s.label].mean;
    double dist2 = 0.0;
    for (std::size_t d = 0; d < mean.size(); ++d)
      dist2 += (s.x[d] - mean[d]) * (s.x[d] - mean[d]);
    // Unit-variance 2D Gaussian: staying within 6 sigma is essentially sure.
    CHECK(dist2 < 36.0);
  }
}

TEST_CASE("weak augmentation with zero noise is the identity") {
  AugmentConfig cfg;
  cfg.sigma_weak = 0.0;
  std::mt19937_64 rng(1);
  const std::vector<double> x = {1.25, -3.5};
  CHECK(augment(x, AugmentStrength::weak, cfg, rng) == x);
}

TEST_CASE("strong augmentation perturbs more than weak on average") {
  AugmentConfig cfg;  // defaults: 0.05 weak, 0.25 strong plus dropping
  std::mt19937_64 rng(2);
  const std::vector<double> x = {1.0, -2.0};
  double weak_disp = 0.0, strong_disp = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> w = augment(x, AugmentStrength::weak, cfg, rng);
    const std::vector<double> s = augment(x, AugmentStrength::strong, cfg, rng);
    for (std::size_t d = 0; d < x.size(); ++d) {
      weak_disp += (w[d] - x[d]) * (w[d] - x[d]);
      strong_disp += (s[d] - x[d]) * (s[d] - x[d]);
    }
  }
  weak_disp /= n;
  strong_disp /= n;
  // Expected squared displacements: 2 sigma_w^2 = 0.005 for weak; the strong
  // branch adds coordinate dropping, so well above 2 sigma_s^2 = 0.125.
  CHECK(weak_disp == doctest::Approx(0.005).epsilon(0.15));
  CHECK(strong_disp > 0.1);
  CHECK(strong_disp > 10.0 * weak_disp);
}

TEST_CASE("strong augmentation zeroes coordinates at the configured rate") {
  AugmentConfig cfg;
  cfg.sigma_strong = 0.0;  // isolate the dropping
  cfg.drop_prob = 0.25;
  std::mt19937_64 rng(3);
  const std::vector<double> x = {5.0, -5.0};
  int dropped = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i)
    for (double v : augment(x, AugmentStrength::strong, cfg, rng))
      if (v == 0.0) ++dropped;
  const double rate = static_cast<double>(dropped) / (2.0 * n);
  CHECK(rate == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("dataset JSONL round trip") {
  const GeneratedData data = generate(GenSpec::defaults(), 77);
  const std::string main_path = "test_data_roundtrip.jsonl";
  const std::string truth_path = "test_data_roundtrip_truth.jsonl";
  save_dataset(main_path, truth_path, data);

  const OpenSetDataset loaded = load_dataset(main_path);
  CHECK(loaded.dim == data.dataset.dim);
  CHECK(loaded.num_classes == data.dataset.num_classes);
  CHECK(loaded.unlabeled == data.dataset.unlabeled);
  REQUIRE(loaded.labeled.size() == data.dataset.labeled.size());
  for (std::size_t i = 0; i < loaded.labeled.size(); ++i) {
    CHECK(loaded.labeled[i].x == data.dataset.labeled[i].x);
    CHECK(loaded.labeled[i].label == data.dataset.labeled[i].label);
  }
  REQUIRE(loaded.test.size() == data.dataset.test.size());
  for (std::size_t i = 0; i < loaded.test.size(); ++i) {
    CHECK(loaded.test[i].x == data.dataset.test[i].x);
    CHECK(loaded.test[i].inlier == data.dataset.test[i].inlier);
    CHECK(loaded.test[i].label == data.dataset.test[i].label);
  }

  const std::vector<HiddenLabel> truth = load_truth(truth_path);
  REQUIRE(truth.size() == data.unlabeled_truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CHECK(truth[i].inlier == data.unlabeled_truth[i].inlier);
    CHECK(truth[i].label == data.unlabeled_truth[i].label);
  }

  // Saving the same data twice produces identical bytes.
  const std::string again = "test_data_roundtrip2.jsonl";
  const std::string again_truth = "test_data_roundtrip2_truth.jsonl";
  save_dataset(again, again_truth, data);
  CHECK(slurp(main_path) == slurp(again));
  CHECK(slurp(truth_path) == slurp(again_truth));

  std::remove(main_path.c_str());
  std::remove(truth_path.c_str());
  std::remove(again.c_str());
  std::remove(again_truth.c_str());
}

TEST_CASE("loading rejects malformed files") {
  CHECK_THROWS_AS(load_dataset("no_such_dataset.jsonl"), std::runtime_error);

  const std::string path = "test_data_bad.jsonl";
  {
    std::ofstream out(path);
    out << "{\"kind\":\"labeled\",\"x\":[0.0,0.0],\"y\":0}\n";  // meta line missing
  }
  CHECK_THROWS_AS(load_dataset(path), std::runtime_error);
  {
    std::ofstream out(path);
    out << "{\"kind\":\"meta\",\"dim\":2,\"classes\":4}\n";
    out << "{\"kind\":\"labeled\",\"x\":[0.0],\"y\":0}\n";  // wrong dimension
  }
  CHECK_THROWS_AS(load_dataset(path), std::runtime_error);
  {
    std::ofstream out(path);
    out << "{\"kind\":\"meta\",\"dim\":2,\"classes\":4}\n";
    out << "{\"kind\":\"labeled\",\"x\":[0.0,0.0],\"y\":9}\n";  // label out of range
  }
  CHECK_THROWS_AS(load_dataset(path), std::runtime_error);
  std::remove(path.c_str());
}

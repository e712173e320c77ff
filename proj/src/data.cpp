#include "anedl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace anedl {

namespace {

std::vector<double> sample_point(const GaussianCluster& c, std::size_t dim,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(dim);
  for (std::size_t j = 0; j < dim; ++j) x[j] = c.mean[j] + c.stddev * n(rng);
  return x;
}

double mean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

nlohmann::json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

}  // namespace

GenSpec GenSpec::defaults() {
  GenSpec s;
  s.inlier_clusters = {{{-2.0, -2.0}, 1.0},
                       {{2.0, -2.0}, 1.0},
                       {{-2.0, 2.0}, 1.0},
                       {{2.0, 2.0}, 1.0}};
  s.outlier_clusters = {{{0.0, 0.0}, 0.6}, {{5.0, 5.0}, 0.8}};
  return s;
}

void GenSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("GenSpec: dim must be >= 1");
  if (inlier_clusters.size() < 2)
    throw std::invalid_argument("GenSpec: need at least 2 inlier classes");
  auto check_cluster = [this](const GaussianCluster& c, const char* what) {
    if (c.mean.size() != dim)
      throw std::invalid_argument(std::string("GenSpec: ") + what +
                                  " mean dimension does not match dim");
    if (!(c.stddev > 0.0) || !std::isfinite(c.stddev))
      throw std::invalid_argument(std::string("GenSpec: ") + what + " stddev must be > 0");
    for (double v : c.mean)
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string("GenSpec: ") + what + " mean must be finite");
  };
  for (const auto& c : inlier_clusters) check_cluster(c, "inlier cluster");
  for (const auto& c : outlier_clusters) check_cluster(c, "outlier cluster");
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0))
    throw std::invalid_argument("GenSpec: outlier_fraction must be in [0, 1]");
  if (labeled_per_class == 0)
    throw std::invalid_argument("GenSpec: labeled_per_class must be >= 1");
  if (!(min_outlier_separation >= 0.0))
    throw std::invalid_argument("GenSpec: min_outlier_separation must be >= 0");
  if (outlier_clusters.empty()) {
    if (outlier_fraction > 0.0 || test_outliers > 0)
      throw std::invalid_argument(
          "GenSpec: outliers requested but no outlier clusters are defined");
  }
  for (const auto& o : outlier_clusters)
    for (const auto& i : inlier_clusters)
      if (mean_distance(o.mean, i.mean) < min_outlier_separation)
        throw std::invalid_argument(
            "GenSpec: outlier cluster closer than min_outlier_separation to an inlier class");
  if (!(augment.sigma_weak >= 0.0) || !(augment.sigma_strong >= 0.0))
    throw std::invalid_argument("GenSpec: augmentation noise must be >= 0");
  if (!(augment.drop_prob >= 0.0 && augment.drop_prob <= 1.0))
    throw std::invalid_argument("GenSpec: drop_prob must be in [0, 1]");
}

GeneratedData generate(const GenSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const std::size_t k = spec.inlier_clusters.size();

  GeneratedData out;
  out.dataset.dim = spec.dim;
  out.dataset.num_classes = k;

  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t n = 0; n < spec.labeled_per_class; ++n)
      out.dataset.labeled.push_back({sample_point(spec.inlier_clusters[c], spec.dim, rng), c});

  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.unlabeled_total) * spec.outlier_fraction));
  const std::size_t n_in = spec.unlabeled_total - n_out;
  std::uniform_int_distribution<std::size_t> pick_class(0, k - 1);
  for (std::size_t n = 0; n < n_in; ++n) {
    const std::size_t c = pick_class(rng);
    out.dataset.unlabeled.push_back(sample_point(spec.inlier_clusters[c], spec.dim, rng));
    out.unlabeled_truth.push_back({true, c});
  }
  if (n_out > 0) {
    std::uniform_int_distribution<std::size_t> pick_outlier(0, spec.outlier_clusters.size() - 1);
    for (std::size_t n = 0; n < n_out; ++n) {
      const std::size_t c = pick_outlier(rng);
      out.dataset.unlabeled.push_back(sample_point(spec.outlier_clusters[c], spec.dim, rng));
      out.unlabeled_truth.push_back({false, c});
    }
  }
  // Interleave inliers and outliers so batch order carries no signal.
  std::vector<std::size_t> perm(out.dataset.unlabeled.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<double>> ux(perm.size());
  std::vector<HiddenLabel> ut(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    ux[i] = std::move(out.dataset.unlabeled[perm[i]]);
    ut[i] = out.unlabeled_truth[perm[i]];
  }
  out.dataset.unlabeled = std::move(ux);
  out.unlabeled_truth = std::move(ut);

  for (std::size_t n = 0; n < spec.test_inliers; ++n) {
    const std::size_t c = n % k;
    out.dataset.test.push_back({sample_point(spec.inlier_clusters[c], spec.dim, rng), true, c});
  }
  for (std::size_t n = 0; n < spec.test_outliers; ++n) {
    const std::size_t c = n % spec.outlier_clusters.size();
    out.dataset.test.push_back({sample_point(spec.outlier_clusters[c], spec.dim, rng), false, c});
  }
  return out;
}

std::vector<double> augment(const std::vector<double>& x, AugmentStrength strength,
                            const AugmentConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double sigma = strength == AugmentStrength::weak ? cfg.sigma_weak : cfg.sigma_strong;
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] + sigma * n(rng);
  if (strength == AugmentStrength::strong && cfg.drop_prob > 0.0) {
    std::bernoulli_distribution drop(cfg.drop_prob);
    for (double& v : out)
      if (drop(rng)) v = 0.0;
  }
  return out;
}

void save_dataset(const std::string& path, const std::string& truth_path,
                  const GeneratedData& data) {
  const OpenSetDataset& ds = data.dataset;
  if (data.unlabeled_truth.size() != ds.unlabeled.size())
    throw std::invalid_argument("save_dataset: truth does not match unlabeled pool");

  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
  f << nlohmann::json{{"kind", "meta"}, {"dim", ds.dim}, {"classes", ds.num_classes}}.dump()
    << "\n";
  for (const auto& s : ds.labeled)
    f << nlohmann::json{{"kind", "labeled"}, {"x", s.x}, {"y", s.label}}.dump() << "\n";
  for (const auto& x : ds.unlabeled)
    f << nlohmann::json{{"kind", "unlabeled"}, {"x", x}}.dump() << "\n";
  for (const auto& s : ds.test)
    f << nlohmann::json{{"kind", "test"}, {"x", s.x}, {"inlier", s.inlier}, {"label", s.label}}
             .dump()
      << "\n";
  if (!f) throw std::runtime_error("save_dataset: write failed for " + path);

  std::ofstream t(truth_path);
  if (!t) throw std::runtime_error("save_dataset: cannot open " + truth_path);
  t << nlohmann::json{{"kind", "meta"}, {"count", data.unlabeled_truth.size()}}.dump() << "\n";
  for (std::size_t i = 0; i < data.unlabeled_truth.size(); ++i) {
    const HiddenLabel& h = data.unlabeled_truth[i];
    t << nlohmann::json{
             {"kind", "truth"}, {"index", i}, {"inlier", h.inlier}, {"label", h.label}}
             .dump()
      << "\n";
  }
  if (!t) throw std::runtime_error("save_dataset: write failed for " + truth_path);
}

OpenSetDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path);

  OpenSetDataset ds;
  std::string line;
  std::size_t lineno = 0;
  bool have_meta = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json j = parse_line(line, path, lineno);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "meta") {
      ds.dim = j.at("dim").get<std::size_t>();
      ds.num_classes = j.at("classes").get<std::size_t>();
      if (ds.dim == 0 || ds.num_classes < 2)
        throw std::runtime_error(path + ": invalid meta record");
      have_meta = true;
      continue;
    }
    if (!have_meta) throw std::runtime_error(path + ": first record must be the meta line");
    auto x = j.at("x").get<std::vector<double>>();
    if (x.size() != ds.dim)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong dimension");
    if (kind == "labeled") {
      const auto y = j.at("y").get<std::size_t>();
      if (y >= ds.num_classes)
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": label out of range");
      ds.labeled.push_back({std::move(x), y});
    } else if (kind == "unlabeled") {
      ds.unlabeled.push_back(std::move(x));
    } else if (kind == "test") {
      ds.test.push_back(
          {std::move(x), j.at("inlier").get<bool>(), j.at("label").get<std::size_t>()});
    } else {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown record kind '" +
                               kind + "'");
    }
  }
  if (!have_meta) throw std::runtime_error(path + ": empty dataset file");
  return ds;
}

std::vector<HiddenLabel> load_truth(const std::string& truth_path) {
  std::ifstream f(truth_path);
  if (!f) throw std::runtime_error("load_truth: cannot open " + truth_path);

  std::vector<HiddenLabel> out;
  std::size_t expected = 0;
  bool have_meta = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json j = parse_line(line, truth_path, lineno);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "meta") {
      expected = j.at("count").get<std::size_t>();
      have_meta = true;
      out.resize(expected);
      continue;
    }
    if (kind != "truth" || !have_meta)
      throw std::runtime_error(truth_path + ":" + std::to_string(lineno) + ": malformed record");
    const auto idx = j.at("index").get<std::size_t>();
    if (idx >= expected)
      throw std::runtime_error(truth_path + ":" + std::to_string(lineno) +
                               ": index out of range");
    out[idx] = {j.at("inlier").get<bool>(), j.at("label").get<std::size_t>()};
  }
  if (!have_meta) throw std::runtime_error(truth_path + ": missing meta line");
  return out;
}

}  // namespace anedl

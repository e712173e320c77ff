#include "anedl/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace anedl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where + " must be an object");
}

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("unknown key '" + (where.empty() ? item.key() : where + "." + item.key()) + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, const T& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for '" + where + "." + key + "'");
  }
}

GaussianCluster parse_cluster(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown(j, where, {"mean", "stddev"});
  if (!j.contains("mean")) fail("'" + where + ".mean' is required");
  GaussianCluster c;
  c.mean = get_or<std::vector<double>>(j, "mean", {}, where);
  c.stddev = get_or<double>(j, "stddev", 1.0, where);
  return c;
}

json cluster_to_json(const GaussianCluster& c) {
  return {{"mean", c.mean}, {"stddev", c.stddev}};
}

GenSpec parse_data(const json& j) {
  expect_object(j, "data");
  reject_unknown(j, "data",
                 {"dim", "inlier_clusters", "outlier_clusters", "labeled_per_class",
                  "unlabeled_total", "outlier_fraction", "test_inliers", "test_outliers",
                  "min_outlier_separation", "augment"});
  GenSpec s = GenSpec::defaults();
  s.dim = get_or<std::size_t>(j, "dim", s.dim, "data");
  if (j.contains("inlier_clusters")) {
    if (!j.at("inlier_clusters").is_array()) fail("'data.inlier_clusters' must be an array");
    s.inlier_clusters.clear();
    std::size_t i = 0;
    for (const auto& c : j.at("inlier_clusters"))
      s.inlier_clusters.push_back(
          parse_cluster(c, "data.inlier_clusters[" + std::to_string(i++) + "]"));
  }
  if (j.contains("outlier_clusters")) {
    if (!j.at("outlier_clusters").is_array()) fail("'data.outlier_clusters' must be an array");
    s.outlier_clusters.clear();
    std::size_t i = 0;
    for (const auto& c : j.at("outlier_clusters"))
      s.outlier_clusters.push_back(
          parse_cluster(c, "data.outlier_clusters[" + std::to_string(i++) + "]"));
  }
  s.labeled_per_class = get_or<std::size_t>(j, "labeled_per_class", s.labeled_per_class, "data");
  s.unlabeled_total = get_or<std::size_t>(j, "unlabeled_total", s.unlabeled_total, "data");
  s.outlier_fraction = get_or<double>(j, "outlier_fraction", s.outlier_fraction, "data");
  s.test_inliers = get_or<std::size_t>(j, "test_inliers", s.test_inliers, "data");
  s.test_outliers = get_or<std::size_t>(j, "test_outliers", s.test_outliers, "data");
  s.min_outlier_separation =
      get_or<double>(j, "min_outlier_separation", s.min_outlier_separation, "data");
  if (j.contains("augment")) {
    const json& a = j.at("augment");
    expect_object(a, "data.augment");
    reject_unknown(a, "data.augment", {"sigma_weak", "sigma_strong", "drop_prob"});
    s.augment.sigma_weak = get_or<double>(a, "sigma_weak", s.augment.sigma_weak, "data.augment");
    s.augment.sigma_strong =
        get_or<double>(a, "sigma_strong", s.augment.sigma_strong, "data.augment");
    s.augment.drop_prob = get_or<double>(a, "drop_prob", s.augment.drop_prob, "data.augment");
  }
  return s;
}

ModelConfig parse_model(const json& j) {
  expect_object(j, "model");
  reject_unknown(j, "model", {"feature_dim", "extractor_hidden", "edl_hidden"});
  ModelConfig m;
  m.feature_dim = get_or<std::size_t>(j, "feature_dim", m.feature_dim, "model");
  m.extractor_hidden =
      get_or<std::vector<std::size_t>>(j, "extractor_hidden", m.extractor_hidden, "model");
  m.edl_hidden = get_or<std::vector<std::size_t>>(j, "edl_hidden", m.edl_hidden, "model");
  return m;
}

SgdConfig parse_optimizer(const json& j) {
  expect_object(j, "optimizer");
  reject_unknown(j, "optimizer", {"learning_rate", "momentum", "weight_decay"});
  SgdConfig o;
  o.learning_rate = get_or<double>(j, "learning_rate", o.learning_rate, "optimizer");
  o.momentum = get_or<double>(j, "momentum", o.momentum, "optimizer");
  o.weight_decay = get_or<double>(j, "weight_decay", o.weight_decay, "optimizer");
  return o;
}

LossWeights parse_loss(const json& j) {
  expect_object(j, "loss");
  reject_unknown(j, "loss",
                 {"lambda1", "lambda2", "lambda_pedl", "lambda_nedl", "lambda_con",
                  "target_evidence", "fixmatch_threshold", "adaptive_weight", "strengthened_kl",
                  "unlabeled_edl", "consistency_symmetric"});
  LossWeights w;
  w.lambda1 = get_or<double>(j, "lambda1", w.lambda1, "loss");
  w.lambda2 = get_or<double>(j, "lambda2", w.lambda2, "loss");
  w.lambda_pedl = get_or<double>(j, "lambda_pedl", w.lambda_pedl, "loss");
  w.lambda_nedl = get_or<double>(j, "lambda_nedl", w.lambda_nedl, "loss");
  w.lambda_con = get_or<double>(j, "lambda_con", w.lambda_con, "loss");
  w.target_evidence = get_or<double>(j, "target_evidence", w.target_evidence, "loss");
  w.fixmatch_threshold = get_or<double>(j, "fixmatch_threshold", w.fixmatch_threshold, "loss");
  w.adaptive_weight = get_or<bool>(j, "adaptive_weight", w.adaptive_weight, "loss");
  w.strengthened_kl = get_or<bool>(j, "strengthened_kl", w.strengthened_kl, "loss");
  w.unlabeled_edl = get_or<bool>(j, "unlabeled_edl", w.unlabeled_edl, "loss");
  w.consistency_symmetric =
      get_or<bool>(j, "consistency_symmetric", w.consistency_symmetric, "loss");
  return w;
}

SelectionMetric parse_selection_metric(const std::string& s) {
  if (s == "calibrated") return SelectionMetric::calibrated;
  if (s == "top_m") return SelectionMetric::top_m;
  fail("train.selection_metric must be 'calibrated' or 'top_m'");
}

TrainConfig parse_train(const json& j) {
  expect_object(j, "train");
  reject_unknown(j, "train",
                 {"epochs_pretrain", "epochs_total", "steps_per_epoch", "batch_labeled",
                  "batch_unlabeled", "top_o", "selection_metric", "selection_top_m",
                  "record_steps"});
  TrainConfig t;
  t.epochs_pretrain = get_or<std::size_t>(j, "epochs_pretrain", t.epochs_pretrain, "train");
  t.epochs_total = get_or<std::size_t>(j, "epochs_total", t.epochs_total, "train");
  t.steps_per_epoch = get_or<std::size_t>(j, "steps_per_epoch", t.steps_per_epoch, "train");
  t.batch_labeled = get_or<std::size_t>(j, "batch_labeled", t.batch_labeled, "train");
  t.batch_unlabeled = get_or<std::size_t>(j, "batch_unlabeled", t.batch_unlabeled, "train");
  t.top_o = get_or<std::size_t>(j, "top_o", t.top_o, "train");
  t.selection_metric =
      parse_selection_metric(get_or<std::string>(j, "selection_metric", "calibrated", "train"));
  t.selection_top_m = get_or<std::size_t>(j, "selection_top_m", t.selection_top_m, "train");
  t.record_steps = get_or<bool>(j, "record_steps", t.record_steps, "train");
  return t;
}

}  // namespace

ModelConfig RunConfig::resolved_model() const {
  ModelConfig m = model;
  m.input_dim = data.dim;
  m.num_classes = data.inlier_clusters.size();
  return m;
}

TrainConfig RunConfig::resolved_train() const {
  TrainConfig t = train;
  t.weights = loss;
  t.optimizer = optimizer;
  t.augment = data.augment;
  t.seed = seed;
  t.report_top_m = metric.top_m;
  return t;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  expect_object(j, "config");
  reject_unknown(j, "",
                 {"seed", "data", "model", "optimizer", "loss", "train", "metric", "paths"});

  RunConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "");
  if (j.contains("data")) cfg.data = parse_data(j.at("data"));
  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j.at("optimizer"));
  if (j.contains("loss")) cfg.loss = parse_loss(j.at("loss"));
  if (j.contains("train")) cfg.train = parse_train(j.at("train"));
  if (j.contains("metric")) {
    const json& m = j.at("metric");
    expect_object(m, "metric");
    reject_unknown(m, "metric", {"top_m"});
    cfg.metric.top_m = get_or<std::size_t>(m, "top_m", cfg.metric.top_m, "metric");
  }
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    expect_object(p, "paths");
    reject_unknown(p, "paths",
                   {"dataset", "truth", "log", "checkpoint", "eval", "sweep", "ablation",
                    "ablation_cells"});
    cfg.paths.dataset = get_or<std::string>(p, "dataset", cfg.paths.dataset, "paths");
    cfg.paths.truth = get_or<std::string>(p, "truth", cfg.paths.truth, "paths");
    cfg.paths.log = get_or<std::string>(p, "log", cfg.paths.log, "paths");
    cfg.paths.checkpoint = get_or<std::string>(p, "checkpoint", cfg.paths.checkpoint, "paths");
    cfg.paths.eval = get_or<std::string>(p, "eval", cfg.paths.eval, "paths");
    cfg.paths.sweep = get_or<std::string>(p, "sweep", cfg.paths.sweep, "paths");
    cfg.paths.ablation = get_or<std::string>(p, "ablation", cfg.paths.ablation, "paths");
    cfg.paths.ablation_cells =
        get_or<std::string>(p, "ablation_cells", cfg.paths.ablation_cells, "paths");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;

  json clusters_in = json::array(), clusters_out = json::array();
  for (const auto& c : cfg.data.inlier_clusters) clusters_in.push_back(cluster_to_json(c));
  for (const auto& c : cfg.data.outlier_clusters) clusters_out.push_back(cluster_to_json(c));
  j["data"] = {{"dim", cfg.data.dim},
               {"inlier_clusters", clusters_in},
               {"outlier_clusters", clusters_out},
               {"labeled_per_class", cfg.data.labeled_per_class},
               {"unlabeled_total", cfg.data.unlabeled_total},
               {"outlier_fraction", cfg.data.outlier_fraction},
               {"test_inliers", cfg.data.test_inliers},
               {"test_outliers", cfg.data.test_outliers},
               {"min_outlier_separation", cfg.data.min_outlier_separation},
               {"augment",
                {{"sigma_weak", cfg.data.augment.sigma_weak},
                 {"sigma_strong", cfg.data.augment.sigma_strong},
                 {"drop_prob", cfg.data.augment.drop_prob}}}};

  j["model"] = {{"feature_dim", cfg.model.feature_dim},
                {"extractor_hidden", cfg.model.extractor_hidden},
                {"edl_hidden", cfg.model.edl_hidden}};

  j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                    {"momentum", cfg.optimizer.momentum},
                    {"weight_decay", cfg.optimizer.weight_decay}};

  j["loss"] = {{"lambda1", cfg.loss.lambda1},
               {"lambda2", cfg.loss.lambda2},
               {"lambda_pedl", cfg.loss.lambda_pedl},
               {"lambda_nedl", cfg.loss.lambda_nedl},
               {"lambda_con", cfg.loss.lambda_con},
               {"target_evidence", cfg.loss.target_evidence},
               {"fixmatch_threshold", cfg.loss.fixmatch_threshold},
               {"adaptive_weight", cfg.loss.adaptive_weight},
               {"strengthened_kl", cfg.loss.strengthened_kl},
               {"unlabeled_edl", cfg.loss.unlabeled_edl},
               {"consistency_symmetric", cfg.loss.consistency_symmetric}};

  j["train"] = {{"epochs_pretrain", cfg.train.epochs_pretrain},
                {"epochs_total", cfg.train.epochs_total},
                {"steps_per_epoch", cfg.train.steps_per_epoch},
                {"batch_labeled", cfg.train.batch_labeled},
                {"batch_unlabeled", cfg.train.batch_unlabeled},
                {"top_o", cfg.train.top_o},
                {"selection_metric", cfg.train.selection_metric == SelectionMetric::calibrated
                                         ? "calibrated"
                                         : "top_m"},
                {"selection_top_m", cfg.train.selection_top_m},
                {"record_steps", cfg.train.record_steps}};

  j["metric"] = {{"top_m", cfg.metric.top_m}};

  j["paths"] = {{"dataset", cfg.paths.dataset},
                {"truth", cfg.paths.truth},
                {"log", cfg.paths.log},
                {"checkpoint", cfg.paths.checkpoint},
                {"eval", cfg.paths.eval},
                {"sweep", cfg.paths.sweep},
                {"ablation", cfg.paths.ablation},
                {"ablation_cells", cfg.paths.ablation_cells}};

  return j.dump(2) + "\n";
}

void write_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path + " for writing");
  f << serialize_run_config(cfg);
  if (!f) throw std::runtime_error("config: write failed for " + path);
}

}  // namespace anedl

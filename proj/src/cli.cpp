#include "anedl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "anedl/data.hpp"
#include "anedl/metrics.hpp"
#include "anedl/training.hpp"

namespace anedl::cli {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

nlohmann::json epoch_to_json(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"stage", r.stage},
          {"lr", r.learning_rate},
          {"loss_total", r.mean_terms.total},
          {"loss_ce", r.mean_terms.ce},
          {"loss_fm", r.mean_terms.fm},
          {"loss_pedl", r.mean_terms.pedl},
          {"loss_kl_labeled", r.mean_terms.kl_labeled},
          {"loss_nedl", r.mean_terms.nedl},
          {"loss_kl_unlabeled", r.mean_terms.kl_unlabeled},
          {"loss_con", r.mean_terms.con},
          {"loss_ano", r.mean_terms.ano},
          {"selection_size", r.selection_size},
          {"test_auroc", r.test_auroc},
          {"test_error_rate", r.test_error_rate}};
}

struct EvalOutput {
  EvalSummary summary;
  nlohmann::json record;
};

EvalOutput evaluate_checkpoint(const RunConfig& cfg, const std::string& out_dir,
                               const std::string& checkpoint_path, std::size_t top_m,
                               bool with_histogram) {
  // An explicitly given checkpoint is the operator's own path; only the
  // config default lives under out_dir.
  const std::string ckpt_path =
      checkpoint_path.empty() ? resolve_path(out_dir, cfg.paths.checkpoint) : checkpoint_path;
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const OpenSetDataset ds = load_dataset(resolve_path(out_dir, cfg.paths.dataset));

  if (ckpt.model_config.num_classes != ds.num_classes)
    throw std::invalid_argument("eval: checkpoint expects " +
                                std::to_string(ckpt.model_config.num_classes) +
                                " classes but the dataset has " + std::to_string(ds.num_classes));
  if (ckpt.model_config.input_dim != ds.dim)
    throw std::invalid_argument("eval: checkpoint input dimension does not match the dataset");

  const TwoHeadModel model = model_from_checkpoint(ckpt);
  const std::size_t m =
      resolve_top_m(top_m != 0 ? top_m : cfg.metric.top_m, ds.num_classes);
  const TestEvaluation ev = evaluate_test(model, ds.test, m);

  EvalOutput out;
  out.summary = {m, ev.auroc, ev.error_rate};
  out.record = {{"top_m", m}, {"auroc", ev.auroc}, {"error_rate", ev.error_rate}};

  if (with_histogram) {
    constexpr std::size_t kBins = 20;
    double lo = ev.scores.front(), hi = ev.scores.front();
    for (double s : ev.scores) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    std::vector<std::size_t> inlier_bins(kBins, 0), outlier_bins(kBins, 0);
    for (std::size_t i = 0; i < ev.scores.size(); ++i) {
      std::size_t b = 0;
      if (hi > lo) {
        b = static_cast<std::size_t>((ev.scores[i] - lo) / (hi - lo) *
                                     static_cast<double>(kBins));
        b = std::min(b, kBins - 1);
      }
      (ds.test[i].inlier ? inlier_bins : outlier_bins)[b]++;
    }
    out.record["histogram"] = {
        {"lo", lo}, {"hi", hi}, {"inlier", inlier_bins}, {"outlier", outlier_bins}};
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation; zero for a single value.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct CellSpec {
  std::string ano, kl, selection;
};

RunConfig cell_config(const RunConfig& base, const CellSpec& cell) {
  RunConfig cfg = base;
  if (cell.ano == "no_adaptive")
    cfg.loss.adaptive_weight = false;
  else if (cell.ano == "neither")
    cfg.loss.unlabeled_edl = false;
  if (cell.kl == "original") {
    cfg.loss.strengthened_kl = false;
  } else {
    cfg.loss.strengthened_kl = true;
    cfg.loss.target_evidence = cell.kl == "strengthened_p200" ? 200.0 : 100.0;
  }
  cfg.train.selection_metric =
      cell.selection == "top_m" ? SelectionMetric::top_m : SelectionMetric::calibrated;
  return cfg;
}

}  // namespace

std::string resolve_path(const std::string& out_dir, const std::string& path) {
  if (out_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(out_dir) / path).string();
}

GenerateSummary cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const GeneratedData data = generate(cfg.data, cfg.seed);
  save_dataset(resolve_path(out_dir, cfg.paths.dataset), resolve_path(out_dir, cfg.paths.truth),
               data);
  GenerateSummary s{data.dataset.labeled.size(), data.dataset.unlabeled.size(),
                    data.dataset.test.size()};
  std::cout << "generated " << s.labeled << " labeled, " << s.unlabeled << " unlabeled, "
            << s.test << " test samples\n";
  return s;
}

TrainSummary cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const std::string ds_path = resolve_path(out_dir, cfg.paths.dataset);
  if (!fs::exists(ds_path))
    throw std::runtime_error("train: dataset " + ds_path + " not found (run generate first)");
  const OpenSetDataset ds = load_dataset(ds_path);

  const std::string log_path = resolve_path(out_dir, cfg.paths.log);
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("train: cannot open " + log_path);

  const TrainResult result =
      train(ds, cfg.resolved_model(), cfg.resolved_train(), [&log](const EpochReport& r) {
        log << epoch_to_json(r).dump() << "\n";
        if (!log) throw std::runtime_error("train: log write failed");
      });

  const std::string ckpt_path = resolve_path(out_dir, cfg.paths.checkpoint);
  save_checkpoint(ckpt_path, result.model, result.optimizer, result.rng_state);

  const EpochReport& last = result.report.epochs.back();
  std::cout << "trained " << last.epoch << " epochs: test AUROC " << last.test_auroc
            << ", inlier error rate " << last.test_error_rate << "\n";
  return {last.test_auroc, last.test_error_rate, log_path, ckpt_path};
}

EvalSummary cmd_eval(const RunConfig& cfg, const std::string& out_dir,
                     const std::string& checkpoint_path, std::size_t top_m) {
  ensure_dir(out_dir);
  const EvalOutput out = evaluate_checkpoint(cfg, out_dir, checkpoint_path, top_m, true);

  const std::string eval_path = resolve_path(out_dir, cfg.paths.eval);
  std::ofstream f(eval_path);
  if (!f) throw std::runtime_error("eval: cannot open " + eval_path);
  f << out.record.dump(2) << "\n";
  if (!f) throw std::runtime_error("eval: write failed for " + eval_path);

  std::cout << "eval top_m=" << out.summary.top_m << ": AUROC " << out.summary.auroc
            << ", inlier error rate " << out.summary.error_rate << "\n";
  return out.summary;
}

std::vector<EvalSummary> cmd_sweep(const RunConfig& cfg, const std::string& out_dir,
                                   std::vector<std::size_t> top_m_values,
                                   const std::string& checkpoint_path) {
  ensure_dir(out_dir);
  if (top_m_values.empty()) {
    const std::size_t k = cfg.data.inlier_clusters.size();
    top_m_values = {1, (k + 3) / 4, (k + 1) / 2, k};
  }
  std::sort(top_m_values.begin(), top_m_values.end());
  top_m_values.erase(std::unique(top_m_values.begin(), top_m_values.end()),
                     top_m_values.end());

  std::vector<EvalSummary> summaries;
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t m : top_m_values) {
    const EvalOutput out = evaluate_checkpoint(cfg, out_dir, checkpoint_path, m, false);
    summaries.push_back(out.summary);
    records.push_back(out.record);
    std::cout << "sweep top_m=" << m << ": AUROC " << out.summary.auroc
              << ", inlier error rate " << out.summary.error_rate << "\n";
  }

  const std::string sweep_path = resolve_path(out_dir, cfg.paths.sweep);
  std::ofstream f(sweep_path);
  if (!f) throw std::runtime_error("sweep: cannot open " + sweep_path);
  f << records.dump(2) << "\n";
  if (!f) throw std::runtime_error("sweep: write failed for " + sweep_path);
  return summaries;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::string& out_dir,
                                    std::size_t jobs) {
  ensure_dir(out_dir);

  std::vector<CellSpec> grid;
  for (const char* ano : {"full", "no_adaptive", "neither"})
    for (const char* kl : {"original", "strengthened_p100", "strengthened_p200"})
      for (const char* sel : {"calibrated", "top_m"}) grid.push_back({ano, kl, sel});

  constexpr std::size_t kSeeds = 3;
  std::vector<GeneratedData> datasets;
  datasets.reserve(kSeeds);
  for (std::size_t s = 0; s < kSeeds; ++s) datasets.push_back(generate(cfg.data, cfg.seed + s));

  const std::string cells_dir = resolve_path(out_dir, cfg.paths.ablation_cells);
  fs::create_directories(cells_dir);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "cell_%02zu.json", i);
    write_run_config((fs::path(cells_dir) / name).string(), cell_config(cfg, grid[i]));
  }

  std::vector<AblationRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        const RunConfig cell_cfg = cell_config(cfg, grid[i]);
        std::vector<double> aurocs, errors;
        for (std::size_t s = 0; s < kSeeds; ++s) {
          TrainConfig tc = cell_cfg.resolved_train();
          tc.seed = cfg.seed + s;
          const TrainResult r =
              train(datasets[s].dataset, cell_cfg.resolved_model(), tc);
          aurocs.push_back(r.report.epochs.back().test_auroc);
          errors.push_back(r.report.epochs.back().test_error_rate);
        }
        rows[i] = {i,
                   grid[i].ano,
                   grid[i].kl,
                   grid[i].selection,
                   mean_of(aurocs),
                   std_of(aurocs),
                   mean_of(errors),
                   std_of(errors)};
        std::lock_guard<std::mutex> lock(io_mutex);
        std::cout << "cell " << i + 1 << "/" << grid.size() << " " << grid[i].ano << "/"
                  << grid[i].kl << "/" << grid[i].selection << ": AUROC " << rows[i].auroc_mean
                  << " +- " << rows[i].auroc_std << "\n";
      } catch (...) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, grid.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  const std::string csv_path = resolve_path(out_dir, cfg.paths.ablation);
  std::ofstream f(csv_path);
  if (!f) throw std::runtime_error("ablate: cannot open " + csv_path);
  f << "cell,ano,kl,selection,auroc_mean,auroc_std,error_mean,error_std\n";
  for (const AblationRow& r : rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%zu,%s,%s,%s,%.6f,%.6f,%.6f,%.6f\n", r.cell,
                  r.ano.c_str(), r.kl.c_str(), r.selection.c_str(), r.auroc_mean, r.auroc_std,
                  r.error_mean, r.error_std);
    f << line;
  }
  if (!f) throw std::runtime_error("ablate: write failed for " + csv_path);
  return rows;
}

}  // namespace anedl::cli

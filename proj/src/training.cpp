#include "anedl/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "anedl/metrics.hpp"

namespace anedl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent substreams from one run seed, so adding draws to one stream
// never shifts another.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

// Endless shuffled walk over 0..n-1, reshuffled on exhaustion.
class IndexStream {
 public:
  IndexStream(std::size_t n, std::mt19937_64& rng) : idx_(n), pos_(n), rng_(rng) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
  }
  void reshuffle() {
    std::shuffle(idx_.begin(), idx_.end(), rng_);
    pos_ = 0;
  }
  std::size_t next() {
    if (pos_ == idx_.size()) reshuffle();
    return idx_[pos_++];
  }

 private:
  std::vector<std::size_t> idx_;
  std::size_t pos_;
  std::mt19937_64& rng_;
};

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void accumulate(AnedlTerms& acc, const AnedlTerms& t) {
  acc.ce += t.ce;
  acc.fm += t.fm;
  acc.pedl += t.pedl;
  acc.kl_labeled += t.kl_labeled;
  acc.nedl += t.nedl;
  acc.kl_unlabeled += t.kl_unlabeled;
  acc.con += t.con;
  acc.ano += t.ano;
  acc.total += t.total;
}

void scale(AnedlTerms& t, double s) {
  t.ce *= s;
  t.fm *= s;
  t.pedl *= s;
  t.kl_labeled *= s;
  t.nedl *= s;
  t.kl_unlabeled *= s;
  t.con *= s;
  t.ano *= s;
  t.total *= s;
}

}  // namespace

std::size_t resolve_top_m(std::size_t requested, std::size_t num_classes) {
  if (requested == 0) return (num_classes + 1) / 2;
  if (requested > num_classes)
    throw std::invalid_argument("top_m exceeds the number of classes");
  return requested;
}

SelectionResult select_inliers(const TwoHeadModel& model,
                               const std::vector<std::vector<double>>& unlabeled,
                               std::size_t top_o, SelectionMetric metric, std::size_t top_m) {
  if (top_o == 0) throw std::invalid_argument("select_inliers: top_o must be >= 1");
  if (unlabeled.empty()) throw std::invalid_argument("select_inliers: empty pool");
  const ForwardResult fr = model.forward(unlabeled);
  const std::size_t k = model.config().num_classes;
  const std::size_t m = resolve_top_m(top_m, k);

  SelectionResult out;
  out.metric.resize(unlabeled.size());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    out.metric[i] = metric == SelectionMetric::calibrated
                        ? fr.alpha[i][argmax(fr.logits[i])]
                        : top_m_evidence(fr.alpha[i], m);
  }

  std::vector<std::size_t> order(unlabeled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stable sort so metric ties resolve to the lower index.
  std::stable_sort(order.begin(), order.end(), [&out](std::size_t a, std::size_t b) {
    return out.metric[a] > out.metric[b];
  });
  order.resize(std::min(top_o, order.size()));
  std::sort(order.begin(), order.end());
  out.indices = std::move(order);
  return out;
}

void TrainConfig::validate() const {
  if (epochs_total == 0) throw std::invalid_argument("TrainConfig: epochs_total must be >= 1");
  if (epochs_pretrain > epochs_total)
    throw std::invalid_argument("TrainConfig: epochs_pretrain exceeds epochs_total");
  if (steps_per_epoch == 0)
    throw std::invalid_argument("TrainConfig: steps_per_epoch must be >= 1");
  if (batch_labeled == 0 || batch_unlabeled == 0)
    throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
  weights.validate();
  SgdConfig oc = optimizer;
  oc.total_steps = 1;
  oc.validate();
}

TestEvaluation evaluate_test(const TwoHeadModel& model, const std::vector<TestSample>& test,
                             std::size_t top_m) {
  if (test.empty()) throw std::invalid_argument("evaluate_test: empty test split");
  const std::size_t m = resolve_top_m(top_m, model.config().num_classes);

  Batch x(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) x[i] = test[i].x;
  const ForwardResult fr = model.forward(x);

  TestEvaluation ev;
  ev.scores.resize(test.size());
  ev.predicted.resize(test.size());
  std::vector<ScoredSample> scored(test.size());
  std::vector<std::size_t> inlier_pred, inlier_truth;
  for (std::size_t i = 0; i < test.size(); ++i) {
    ev.scores[i] = top_m_evidence(fr.alpha[i], m);
    ev.predicted[i] = argmax(fr.logits[i]);
    scored[i] = {ev.scores[i], test[i].inlier};
    if (test[i].inlier) {
      inlier_pred.push_back(ev.predicted[i]);
      inlier_truth.push_back(test[i].label);
    }
  }

  const bool has_both = !inlier_pred.empty() && inlier_pred.size() < test.size();
  ev.auroc = has_both ? auroc(scored) : std::numeric_limits<double>::quiet_NaN();
  ev.error_rate = inlier_pred.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : error_rate(inlier_pred, inlier_truth);
  return ev;
}

TrainResult train(const OpenSetDataset& data, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (data.labeled.empty()) throw std::invalid_argument("train: no labeled samples");
  if (data.unlabeled.empty()) throw std::invalid_argument("train: no unlabeled samples");
  if (data.test.empty()) throw std::invalid_argument("train: no test samples");
  if (model_cfg.num_classes != data.num_classes)
    throw std::invalid_argument("train: model num_classes does not match the dataset");
  if (model_cfg.input_dim != data.dim)
    throw std::invalid_argument("train: model input_dim does not match the dataset");

  const std::size_t k = data.num_classes;
  const std::size_t report_m = resolve_top_m(cfg.report_top_m, k);
  if (cfg.selection_metric == SelectionMetric::top_m) resolve_top_m(cfg.selection_top_m, k);
  const std::size_t top_o =
      cfg.top_o == 0 ? std::max<std::size_t>(1, data.unlabeled.size() / 2) : cfg.top_o;

  TwoHeadModel model(model_cfg, derive_seed(cfg.seed, 0));
  SgdConfig oc = cfg.optimizer;
  oc.total_steps = cfg.epochs_total * cfg.steps_per_epoch;
  SgdOptimizer opt(oc, model.parameter_count());

  std::mt19937_64 rng_shuffle(derive_seed(cfg.seed, 1));
  std::mt19937_64 rng_augment(derive_seed(cfg.seed, 2));
  IndexStream labeled_stream(data.labeled.size(), rng_shuffle);
  IndexStream unlabeled_stream(data.unlabeled.size(), rng_shuffle);

  std::vector<std::vector<double>> onehot(data.labeled.size());
  for (std::size_t i = 0; i < data.labeled.size(); ++i)
    onehot[i] = one_hot(k, data.labeled[i].label);

  std::vector<char> selected_mask(data.unlabeled.size(), 0);
  std::size_t selection_size = 0;

  RunReport report;
  std::vector<double> grad(model.parameter_count());

  for (std::size_t epoch = 1; epoch <= cfg.epochs_total; ++epoch) {
    const int stage = epoch <= cfg.epochs_pretrain ? 1 : 2;
    labeled_stream.reshuffle();
    unlabeled_stream.reshuffle();

    if (stage == 2) {
      const SelectionResult sel = select_inliers(model, data.unlabeled, top_o,
                                                 cfg.selection_metric, cfg.selection_top_m);
      std::fill(selected_mask.begin(), selected_mask.end(), 0);
      for (std::size_t i : sel.indices) selected_mask[i] = 1;
      selection_size = sel.indices.size();
    }

    const double lr_epoch = opt.current_learning_rate();
    AnedlTerms sums;

    for (std::size_t step = 1; step <= cfg.steps_per_epoch; ++step) {
      AnedlBatch b;
      Batch lx(cfg.batch_labeled);
      b.labels.resize(cfg.batch_labeled);
      for (std::size_t i = 0; i < cfg.batch_labeled; ++i) {
        const std::size_t idx = labeled_stream.next();
        lx[i] = augment(data.labeled[idx].x, AugmentStrength::weak, cfg.augment, rng_augment);
        b.labels[i] = onehot[idx];
      }

      std::vector<std::size_t> ub(cfg.batch_unlabeled);
      for (std::size_t i = 0; i < cfg.batch_unlabeled; ++i) ub[i] = unlabeled_stream.next();
      Batch uxw(cfg.batch_unlabeled), uxs(cfg.batch_unlabeled);
      for (std::size_t i = 0; i < cfg.batch_unlabeled; ++i)
        uxw[i] = augment(data.unlabeled[ub[i]], AugmentStrength::weak, cfg.augment, rng_augment);
      for (std::size_t i = 0; i < cfg.batch_unlabeled; ++i)
        uxs[i] =
            augment(data.unlabeled[ub[i]], AugmentStrength::strong, cfg.augment, rng_augment);

      ForwardTrace tl, tw, ts;
      ForwardResult fl = model.forward(lx, tl);
      ForwardResult fw = model.forward(uxw, tw);
      ForwardResult fs = model.forward(uxs, ts);
      b.labeled_logits = std::move(fl.logits);
      b.labeled_alpha = std::move(fl.alpha);
      b.unlabeled_logits_weak = std::move(fw.logits);
      b.unlabeled_alpha_weak = std::move(fw.alpha);
      b.unlabeled_logits_strong = std::move(fs.logits);
      b.unlabeled_alpha_strong = std::move(fs.alpha);
      if (stage == 2)
        for (std::size_t i = 0; i < ub.size(); ++i)
          if (selected_mask[ub[i]]) b.selected.push_back(i);

      const double lr_step = opt.current_learning_rate();
      const AnedlLossValue lv = loss_anedl(b, cfg.weights);
      if (!std::isfinite(lv.terms.total)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << " step " << step
            << " (ce=" << lv.terms.ce << " fm=" << lv.terms.fm << " ano=" << lv.terms.ano
            << " con=" << lv.terms.con << ")";
        throw std::runtime_error(msg.str());
      }

      std::fill(grad.begin(), grad.end(), 0.0);
      model.backward(tl, lv.grad_labeled_logits, lv.grad_labeled_alpha, grad);
      model.backward(tw, {}, lv.grad_unlabeled_alpha_weak, grad);
      model.backward(ts, lv.grad_unlabeled_logits_strong, lv.grad_unlabeled_alpha_strong, grad);
      opt.step(model, grad);

      accumulate(sums, lv.terms);
      if (cfg.record_steps) report.steps.push_back({epoch, step, lr_step, lv.terms});
    }

    scale(sums, 1.0 / static_cast<double>(cfg.steps_per_epoch));
    const TestEvaluation ev = evaluate_test(model, data.test, report_m);
    EpochReport r;
    r.epoch = epoch;
    r.stage = stage;
    r.learning_rate = lr_epoch;
    r.mean_terms = sums;
    r.selection_size = stage == 2 ? selection_size : 0;
    r.test_auroc = ev.auroc;
    r.test_error_rate = ev.error_rate;
    report.epochs.push_back(r);
    if (on_epoch) on_epoch(r);
  }

  std::ostringstream rng_state;
  rng_state << rng_augment;
  return {std::move(report), std::move(model), std::move(opt), rng_state.str()};
}

}  // namespace anedl

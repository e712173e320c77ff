#include "anedl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anedl/specfn.hpp"

namespace anedl {

namespace {

void check_one_hot(const std::vector<double>& y, std::size_t k) {
  if (y.size() != k)
    throw std::invalid_argument("loss: label size " + std::to_string(y.size()) +
                                " does not match class count " + std::to_string(k));
  std::size_t ones = 0;
  for (double v : y) {
    if (v == 1.0)
      ++ones;
    else if (v != 0.0)
      throw std::invalid_argument("loss: label is not one-hot");
  }
  if (ones != 1) throw std::invalid_argument("loss: label is not one-hot");
}

std::size_t hot_index(const std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == 1.0) return i;
  throw std::invalid_argument("loss: label is not one-hot");
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string("loss: ") + what + " size mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

void add_scaled(std::vector<double>& dst, const std::vector<double>& src, double s) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

}  // namespace

void LossWeights::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("LossWeights: ") + name + " must be >= 0");
  };
  nonneg(lambda1, "lambda1");
  nonneg(lambda2, "lambda2");
  nonneg(lambda_pedl, "lambda_pedl");
  nonneg(lambda_nedl, "lambda_nedl");
  nonneg(lambda_con, "lambda_con");
  if (!(target_evidence >= 1.0) || !std::isfinite(target_evidence))
    throw std::invalid_argument("LossWeights: target_evidence must be >= 1");
  if (!(fixmatch_threshold > 0.0 && fixmatch_threshold <= 1.0))
    throw std::invalid_argument("LossWeights: fixmatch_threshold must be in (0, 1]");
}

std::vector<double> one_hot(std::size_t num_classes, std::size_t k) {
  if (k >= num_classes) throw std::invalid_argument("one_hot: class index out of range");
  std::vector<double> y(num_classes, 0.0);
  y[k] = 1.0;
  return y;
}

LossValue loss_nedl(const ConcentrationVector& cv, const LossWeights& w) {
  const std::size_t k = cv.size();
  const double a0 = cv.precision();
  const double uniform = 1.0 / static_cast<double>(k);

  LossValue out;
  out.grad.assign(k, 0.0);

  // Quadratic part: sum_k d_k^2 w_k with d_k = 1/K - alpha_k/alpha0 and
  // w_k = trigamma(alpha_k) (or 1 when the adaptive weighting is ablated).
  // d d_k / d alpha_j = -delta_jk / alpha0 + alpha_k / alpha0^2.
  std::vector<double> d(k), wt(k);
  double cross = 0.0;  // sum_k d_k w_k alpha_k
  for (std::size_t i = 0; i < k; ++i) {
    d[i] = uniform - cv[i] / a0;
    wt[i] = w.adaptive_weight ? specfn::trigamma(cv[i]) : 1.0;
    out.value += d[i] * d[i] * wt[i];
    cross += d[i] * wt[i] * cv[i];
  }
  for (std::size_t j = 0; j < k; ++j) {
    out.grad[j] = 2.0 * cross / (a0 * a0) - 2.0 * d[j] * wt[j] / a0;
    if (w.adaptive_weight) out.grad[j] += d[j] * d[j] * specfn::tetragamma(cv[j]);
  }

  if (w.lambda1 != 0.0) {
    out.value -= w.lambda1 * fim_logdet(cv);
    add_scaled(out.grad, fim_logdet_grad(cv), -w.lambda1);
  }
  return out;
}

LossValue loss_pedl(const ConcentrationVector& cv, const std::vector<double>& y,
                    const LossWeights& w) {
  const std::size_t k = cv.size();
  check_one_hot(y, k);
  const double a0 = cv.precision();

  LossValue out;
  out.grad.assign(k, 0.0);

  // sum_k (A_k + B_k) w_k with A_k = (y_k - p_k)^2 the squared calibration
  // error and B_k = p_k (1 - p_k) / (alpha0 + 1) the Dirichlet variance,
  // p_k = alpha_k / alpha0, w_k = trigamma(alpha_k).
  std::vector<double> p(k), wt(k), ab(k);
  double sum_res_p = 0.0;   // sum_k (y_k - p_k) p_k w_k
  double sum_var_p = 0.0;   // sum_k (1 - 2 p_k) p_k w_k
  double sum_var_w = 0.0;   // sum_k p_k (1 - p_k) w_k
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = cv[i] / a0;
    wt[i] = specfn::trigamma(cv[i]);
    const double a = (y[i] - p[i]) * (y[i] - p[i]);
    const double b = p[i] * (1.0 - p[i]) / (a0 + 1.0);
    ab[i] = a + b;
    out.value += ab[i] * wt[i];
    sum_res_p += (y[i] - p[i]) * p[i] * wt[i];
    sum_var_p += (1.0 - 2.0 * p[i]) * p[i] * wt[i];
    sum_var_w += p[i] * (1.0 - p[i]) * wt[i];
  }
  // d p_k / d alpha_j = (delta_jk - p_k) / alpha0.
  for (std::size_t j = 0; j < k; ++j) {
    const double da = -2.0 / a0 * ((y[j] - p[j]) * wt[j] - sum_res_p);
    const double db = ((1.0 - 2.0 * p[j]) * wt[j] - sum_var_p) / (a0 * (a0 + 1.0)) -
                      sum_var_w / ((a0 + 1.0) * (a0 + 1.0));
    out.grad[j] = da + db + ab[j] * specfn::tetragamma(cv[j]);
  }

  if (w.lambda2 != 0.0) {
    out.value -= w.lambda2 * fim_logdet(cv);
    add_scaled(out.grad, fim_logdet_grad(cv), -w.lambda2);
  }
  return out;
}

LossValue loss_kl_strengthened(const ConcentrationVector& cv, const ConcentrationVector& target) {
  check_same_size(cv.size(), target.size(), "KL target");
  LossValue out;
  out.value = kl_dirichlet(cv, target);
  out.grad.assign(cv.size(), 0.0);
  const double t0 = specfn::trigamma(cv.precision());
  for (std::size_t j = 0; j < cv.size(); ++j)
    out.grad[j] = (cv[j] - target[j]) * specfn::trigamma(cv[j]) -
                  (cv.precision() - target.precision()) * t0;
  return out;
}

LossValue loss_kl_original(const ConcentrationVector& cv, const std::vector<double>& y) {
  const std::size_t k = cv.size();
  check_one_hot(y, k);

  // Masked concentration: the true-class coordinate is replaced by 1, so only
  // misleading evidence is penalized and the true class gets no gradient.
  std::vector<double> masked(k);
  for (std::size_t i = 0; i < k; ++i) masked[i] = y[i] == 1.0 ? 1.0 : cv[i];
  const ConcentrationVector hat(masked);
  const ConcentrationVector ones(std::vector<double>(k, 1.0));

  LossValue out;
  out.value = kl_dirichlet(hat, ones);
  out.grad.assign(k, 0.0);
  const double t0 = specfn::trigamma(hat.precision());
  for (std::size_t j = 0; j < k; ++j) {
    if (y[j] == 1.0) continue;
    out.grad[j] = (hat[j] - 1.0) * specfn::trigamma(hat[j]) -
                  (hat.precision() - static_cast<double>(k)) * t0;
  }
  return out;
}

LossValue loss_consistency(const ConcentrationVector& cv_strong,
                           const ConcentrationVector& cv_weak) {
  check_same_size(cv_strong.size(), cv_weak.size(), "consistency pair");
  LossValue out;
  out.grad.assign(cv_strong.size(), 0.0);
  for (std::size_t i = 0; i < cv_strong.size(); ++i) {
    const double diff = cv_strong[i] - cv_weak[i];
    out.value += diff * diff;
    out.grad[i] = 2.0 * diff;
  }
  return out;
}

LossValue loss_ce(const std::vector<double>& logits, const std::vector<double>& y) {
  const std::size_t k = logits.size();
  if (k == 0) throw std::invalid_argument("loss_ce: empty logits");
  check_one_hot(y, k);
  for (double v : logits)
    if (!std::isfinite(v)) throw std::invalid_argument("loss_ce: non-finite logit");

  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double lse = m + std::log(z);

  LossValue out;
  out.grad.assign(k, 0.0);
  const std::size_t t = hot_index(y);
  out.value = lse - logits[t];
  for (std::size_t i = 0; i < k; ++i) out.grad[i] = std::exp(logits[i] - lse) - y[i];
  return out;
}

LossValue loss_fixmatch(const std::vector<double>& logits_weak,
                        const std::vector<double>& logits_strong, double tau) {
  check_same_size(logits_weak.size(), logits_strong.size(), "fixmatch pair");
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("loss_fixmatch: tau must be in (0, 1]");
  const std::size_t k = logits_weak.size();
  if (k == 0) throw std::invalid_argument("loss_fixmatch: empty logits");

  const auto best = std::max_element(logits_weak.begin(), logits_weak.end());
  const double m = *best;
  double z = 0.0;
  for (double v : logits_weak) z += std::exp(v - m);
  const double confidence = 1.0 / z;  // softmax at the argmax

  LossValue out;
  out.grad.assign(k, 0.0);
  if (confidence < tau) return out;
  const auto pseudo = static_cast<std::size_t>(best - logits_weak.begin());
  return loss_ce(logits_strong, one_hot(k, pseudo));
}

AnoLossValue loss_ano(const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                      const LossWeights& w) {
  w.validate();
  if (labeled.alpha.empty()) throw std::invalid_argument("loss_ano: empty labeled batch");
  if (unlabeled.alpha.empty()) throw std::invalid_argument("loss_ano: empty unlabeled batch");
  check_same_size(labeled.alpha.size(), labeled.y.size(), "labeled batch");

  const std::size_t k = labeled.alpha.front().size();
  const double nl = static_cast<double>(labeled.alpha.size());
  const double nu = static_cast<double>(unlabeled.alpha.size());

  AnoLossValue out;
  out.grad_labeled.assign(labeled.alpha.size(), std::vector<double>(k, 0.0));
  out.grad_unlabeled.assign(unlabeled.alpha.size(), std::vector<double>(k, 0.0));

  for (std::size_t i = 0; i < labeled.alpha.size(); ++i) {
    const auto& cv = labeled.alpha[i];
    check_same_size(cv.size(), k, "labeled batch row");
    const LossValue pe = loss_pedl(cv, labeled.y[i], w);
    LossValue kl;
    if (w.strengthened_kl) {
      std::vector<double> beta(k, 1.0);
      beta[hot_index(labeled.y[i])] = w.target_evidence;
      kl = loss_kl_strengthened(cv, ConcentrationVector(beta));
    } else {
      kl = loss_kl_original(cv, labeled.y[i]);
    }
    out.pedl += pe.value / nl;
    out.kl_labeled += kl.value / nl;
    for (std::size_t j = 0; j < k; ++j)
      out.grad_labeled[i][j] = w.lambda_pedl / nl * (pe.grad[j] + kl.grad[j]);
  }

  if (w.unlabeled_edl) {
    const ConcentrationVector ones(std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < unlabeled.alpha.size(); ++i) {
      const auto& cv = unlabeled.alpha[i];
      check_same_size(cv.size(), k, "unlabeled batch row");
      const LossValue ne = loss_nedl(cv, w);
      const LossValue kl = loss_kl_strengthened(cv, ones);
      out.nedl += ne.value / nu;
      out.kl_unlabeled += kl.value / nu;
      for (std::size_t j = 0; j < k; ++j)
        out.grad_unlabeled[i][j] = w.lambda_nedl / nu * (ne.grad[j] + kl.grad[j]);
    }
  }

  out.value = w.lambda_pedl * (out.pedl + out.kl_labeled) +
              w.lambda_nedl * (out.nedl + out.kl_unlabeled);
  return out;
}

AnedlLossValue loss_anedl(const AnedlBatch& batch, const LossWeights& w) {
  w.validate();
  const std::size_t nl = batch.labeled_logits.size();
  const std::size_t nu = batch.unlabeled_alpha_weak.size();
  check_same_size(nl, batch.labeled_alpha.size(), "labeled alpha");
  check_same_size(nl, batch.labels.size(), "labels");
  check_same_size(nu, batch.unlabeled_alpha_strong.size(), "strong alpha");
  check_same_size(nu, batch.unlabeled_logits_weak.size(), "weak logits");
  check_same_size(nu, batch.unlabeled_logits_strong.size(), "strong logits");
  if (nl == 0) throw std::invalid_argument("loss_anedl: empty labeled batch");
  if (nu == 0) throw std::invalid_argument("loss_anedl: empty unlabeled batch");
  for (std::size_t s : batch.selected)
    if (s >= nu) throw std::invalid_argument("loss_anedl: selected index out of range");

  const std::size_t k = batch.labeled_alpha.front().size();

  AnedlLossValue out;
  out.grad_labeled_logits.assign(nl, std::vector<double>(k, 0.0));
  out.grad_unlabeled_logits_strong.assign(nu, std::vector<double>(k, 0.0));
  out.grad_unlabeled_alpha_weak.assign(nu, std::vector<double>(k, 0.0));
  out.grad_unlabeled_alpha_strong.assign(nu, std::vector<double>(k, 0.0));

  for (std::size_t i = 0; i < nl; ++i) {
    const LossValue ce = loss_ce(batch.labeled_logits[i], batch.labels[i]);
    out.terms.ce += ce.value / static_cast<double>(nl);
    out.grad_labeled_logits[i] = ce.grad;
    for (double& g : out.grad_labeled_logits[i]) g /= static_cast<double>(nl);
  }

  if (!batch.selected.empty()) {
    const double ns = static_cast<double>(batch.selected.size());
    for (std::size_t s : batch.selected) {
      const LossValue fm = loss_fixmatch(batch.unlabeled_logits_weak[s],
                                         batch.unlabeled_logits_strong[s], w.fixmatch_threshold);
      out.terms.fm += fm.value / ns;
      for (std::size_t j = 0; j < k; ++j)
        out.grad_unlabeled_logits_strong[s][j] += fm.grad[j] / ns;
    }
  }

  const AnoLossValue ano =
      loss_ano(LabeledBatch{batch.labeled_alpha, batch.labels},
               UnlabeledBatch{batch.unlabeled_alpha_weak}, w);
  out.terms.pedl = ano.pedl;
  out.terms.kl_labeled = ano.kl_labeled;
  out.terms.nedl = ano.nedl;
  out.terms.kl_unlabeled = ano.kl_unlabeled;
  out.terms.ano = ano.value;
  out.grad_labeled_alpha = ano.grad_labeled;
  out.grad_unlabeled_alpha_weak = ano.grad_unlabeled;

  for (std::size_t i = 0; i < nu; ++i) {
    const LossValue con =
        loss_consistency(batch.unlabeled_alpha_strong[i], batch.unlabeled_alpha_weak[i]);
    out.terms.con += con.value / static_cast<double>(nu);
    const double s = w.lambda_con / static_cast<double>(nu);
    for (std::size_t j = 0; j < k; ++j) {
      out.grad_unlabeled_alpha_strong[i][j] += s * con.grad[j];
      if (w.consistency_symmetric) out.grad_unlabeled_alpha_weak[i][j] -= s * con.grad[j];
    }
  }

  out.terms.total = out.terms.ce + out.terms.fm + out.terms.ano + w.lambda_con * out.terms.con;
  return out;
}

}  // namespace anedl

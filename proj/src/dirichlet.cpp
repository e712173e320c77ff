#include "anedl/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anedl/specfn.hpp"

namespace anedl {

ConcentrationVector::ConcentrationVector(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() < 2) {
    throw std::invalid_argument("ConcentrationVector: need at least 2 classes, got " +
                                std::to_string(alpha_.size()));
  }
  double sum = 0.0;
  for (double a : alpha_) {
    if (!std::isfinite(a) || a < 1.0) {
      throw std::invalid_argument("ConcentrationVector: entries must be finite and >= 1, got " +
                                  std::to_string(a));
    }
    sum += a;
  }
  precision_ = sum;
}

DirichletSummary summarize(const ConcentrationVector& cv) {
  DirichletSummary s;
  s.precision = cv.precision();
  s.vacuity = static_cast<double>(cv.size()) / s.precision;
  s.expected_prob.resize(cv.size());
  for (std::size_t k = 0; k < cv.size(); ++k) {
    s.expected_prob[k] = cv[k] / s.precision;
  }
  return s;
}

double fim_logdet(const ConcentrationVector& cv) {
  const double t0 = specfn::trigamma(cv.precision());
  double log_prod = 0.0;
  double ratio_sum = 0.0;
  for (std::size_t k = 0; k < cv.size(); ++k) {
    const double tk = specfn::trigamma(cv[k]);
    log_prod += std::log(tk);
    ratio_sum += t0 / tk;
  }
  const double inner = 1.0 - ratio_sum;
  if (!(inner > 0.0)) {
    throw std::domain_error("fim_logdet: rank-one correction term is not positive (" +
                            std::to_string(inner) + "); alpha outside supported range");
  }
  return log_prod + std::log(inner);
}

std::vector<double> fim_logdet_grad(const ConcentrationVector& cv) {
  const std::size_t K = cv.size();
  const double a0 = cv.precision();
  const double t0 = specfn::trigamma(a0);
  const double dt0 = specfn::tetragamma(a0);

  std::vector<double> t(K), dt(K);
  double ratio_sum = 0.0;
  double inv_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    t[k] = specfn::trigamma(cv[k]);
    dt[k] = specfn::tetragamma(cv[k]);
    ratio_sum += t0 / t[k];
    inv_sum += 1.0 / t[k];
  }
  const double inner = 1.0 - ratio_sum;
  if (!(inner > 0.0)) {
    throw std::domain_error("fim_logdet_grad: rank-one correction term is not positive");
  }

  // d/d alpha_j [ sum_k ln t_k + ln(1 - t0 * sum_k 1/t_k) ]
  //   = dt_j / t_j + (t0 * dt_j / t_j^2 - dt0 * sum_k 1/t_k) / inner
  std::vector<double> grad(K);
  for (std::size_t j = 0; j < K; ++j) {
    grad[j] = dt[j] / t[j] + (t0 * dt[j] / (t[j] * t[j]) - dt0 * inv_sum) / inner;
  }
  return grad;
}

double kl_dirichlet(const ConcentrationVector& cv, const ConcentrationVector& target) {
  if (cv.size() != target.size()) {
    throw std::invalid_argument("kl_dirichlet: dimension mismatch (" + std::to_string(cv.size()) +
                                " vs " + std::to_string(target.size()) + ")");
  }
  const double a0 = cv.precision();
  const double b0 = target.precision();
  double v = specfn::lgamma(a0) - specfn::lgamma(b0);
  const double psi_a0 = specfn::digamma(a0);
  for (std::size_t k = 0; k < cv.size(); ++k) {
    v -= specfn::lgamma(cv[k]);
    v += specfn::lgamma(target[k]);
    v += (cv[k] - target[k]) * (specfn::digamma(cv[k]) - psi_a0);
  }
  return v;
}

double differential_entropy(const ConcentrationVector& cv) {
  const std::size_t K = cv.size();
  const double a0 = cv.precision();
  double log_beta = -specfn::lgamma(a0);
  double correction = (a0 - static_cast<double>(K)) * specfn::digamma(a0);
  for (std::size_t k = 0; k < K; ++k) {
    log_beta += specfn::lgamma(cv[k]);
    correction -= (cv[k] - 1.0) * specfn::digamma(cv[k]);
  }
  return log_beta + correction;
}

double mutual_information(const ConcentrationVector& cv) {
  const double a0 = cv.precision();
  const double psi_a0p1 = specfn::digamma(a0 + 1.0);
  double mi = 0.0;
  for (std::size_t k = 0; k < cv.size(); ++k) {
    const double p = cv[k] / a0;
    mi += -p * std::log(p) + p * (specfn::digamma(cv[k] + 1.0) - psi_a0p1);
  }
  return mi;
}

double top_m_evidence(const ConcentrationVector& cv, std::size_t m) {
  if (m < 1 || m > cv.size()) {
    throw std::invalid_argument("top_m_evidence: m must be in [1, K], got " + std::to_string(m));
  }
  std::vector<double> sorted = cv.values();
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end(),
                    std::greater<double>());
  double sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sum += sorted[k];
  }
  return sum;
}

}  // namespace anedl

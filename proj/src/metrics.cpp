#include "anedl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace anedl {

double auroc(const std::vector<ScoredSample>& samples) {
  std::size_t n_in = 0, n_out = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("auroc: non-finite score");
    (s.inlier ? n_in : n_out)++;
  }
  if (n_in == 0 || n_out == 0)
    throw std::invalid_argument("auroc: need at least one inlier and one outlier");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&samples](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });

  // Midrank sum over inliers: tied scores share the average of their ranks.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t t = i; t < j; ++t)
      if (samples[order[t]].inlier) rank_sum += midrank;
    i = j;
  }

  const double u =
      rank_sum - 0.5 * static_cast<double>(n_in) * static_cast<double>(n_in + 1);
  return u / (static_cast<double>(n_in) * static_cast<double>(n_out));
}

double error_rate(const std::vector<std::size_t>& predicted,
                  const std::vector<std::size_t>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("error_rate: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("error_rate: empty input");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] != truth[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

double score_inference(const ConcentrationVector& cv, std::size_t m) {
  return top_m_evidence(cv, m);
}

}  // namespace anedl

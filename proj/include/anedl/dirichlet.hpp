#pragma once

#include <cstddef>
#include <vector>

// Dirichlet evidence representation and the closed-form quantities derived
// from the concentration parameters: expected probabilities, vacuity, the
// Fisher-information log-determinant, Dirichlet-Dirichlet KL divergence and
// the entropy-based uncertainty metrics.

namespace anedl {

// Concentration parameters alpha of a Dirichlet over K >= 2 classes.
// Every entry is >= 1 (evidence e_k = alpha_k - 1 is non-negative, which the
// model head guarantees through its non-negative activation) and finite.
// Immutable after construction; construction validates the invariants.
class ConcentrationVector {
 public:
  explicit ConcentrationVector(std::vector<double> alpha);

  std::size_t size() const { return alpha_.size(); }
  double operator[](std::size_t k) const { return alpha_[k]; }
  const std::vector<double>& values() const { return alpha_; }

  // alpha0 = sum of all entries.
  double precision() const { return precision_; }

 private:
  std::vector<double> alpha_;
  double precision_;
};

struct DirichletSummary {
  std::vector<double> expected_prob;  // p_k = alpha_k / alpha0, sums to 1
  double precision = 0.0;             // alpha0
  double vacuity = 0.0;               // K / alpha0, in (0, 1]
};

DirichletSummary summarize(const ConcentrationVector& cv);

// Log-determinant of the Fisher information matrix of Dir(alpha), whose
// entries are I_jk = trigamma(alpha_j) [j == k] - trigamma(alpha0).
// Evaluated through the rank-one-update closed form
//   sum_k log trigamma(alpha_k) + log(1 - sum_k trigamma(alpha0)/trigamma(alpha_k)).
// Throws std::domain_error if the argument of the final log is not positive,
// which signals an alpha outside the supported range.
double fim_logdet(const ConcentrationVector& cv);

// Gradient of fim_logdet with respect to alpha.
std::vector<double> fim_logdet_grad(const ConcentrationVector& cv);

// D_KL(Dir(alpha) || Dir(beta)) in closed form. Non-negative, zero iff
// alpha == beta. Throws std::invalid_argument on dimension mismatch.
double kl_dirichlet(const ConcentrationVector& cv, const ConcentrationVector& target);

// Differential entropy of Dir(alpha):
//   ln B(alpha) + (alpha0 - K) psi(alpha0) - sum_k (alpha_k - 1) psi(alpha_k).
double differential_entropy(const ConcentrationVector& cv);

// Mutual information between the class label and the categorical parameters,
//   H[E p] - E H[p] = -sum_k p_k ln p_k + sum_k p_k (psi(alpha_k+1) - psi(alpha0+1)).
// Non-negative.
double mutual_information(const ConcentrationVector& cv);

// Sum of the m largest concentration entries, 1 <= m <= K. With m == K this
// is the precision alpha0, the total-evidence metric of earlier EDL work.
double top_m_evidence(const ConcentrationVector& cv, std::size_t m);

}  // namespace anedl

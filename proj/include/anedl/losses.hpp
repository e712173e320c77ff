#pragma once

#include <cstddef>
#include <vector>

#include "anedl/dirichlet.hpp"

// The objective terms of adaptive negative evidential learning, each as a
// differentiable scalar function returning its value together with the exact
// analytic gradient (with respect to alpha for the detector losses, with
// respect to logits for the classifier losses).

namespace anedl {

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // d value / d alpha_k, or d value / d logit_k
};

struct LossWeights {
  double lambda1 = 0.1;     // FIM log-det weight inside the unlabeled detector loss
  double lambda2 = 0.1;     // FIM log-det weight inside the labeled detector loss
  double lambda_pedl = 0.15;
  double lambda_nedl = 1.0;
  double lambda_con = 0.01;
  double target_evidence = 100.0;    // boosted true-class concentration of the KL target
  double fixmatch_threshold = 0.95;  // pseudo-label confidence gate, in (0, 1]

  // Ablation switches. All default to the full method.
  bool adaptive_weight = true;   // false: trigamma factors of the unlabeled quadratic term -> 1
  bool strengthened_kl = true;   // false: evidence-masking KL for labeled samples instead
  bool unlabeled_edl = true;     // false: drop the unlabeled term of the combined detector loss
  bool consistency_symmetric = true;  // false: weak branch treated as a fixed target

  void validate() const;  // throws std::invalid_argument
};

std::vector<double> one_hot(std::size_t num_classes, std::size_t k);

// Unlabeled detector loss: pushes expected probabilities toward 1/K with a
// per-class trigamma weight, minus lambda1 times the FIM log-determinant.
LossValue loss_nedl(const ConcentrationVector& cv, const LossWeights& w);

// Labeled detector loss: trigamma-weighted squared error against the one-hot
// target plus the Dirichlet variance term, minus lambda2 times the FIM
// log-determinant.
LossValue loss_pedl(const ConcentrationVector& cv, const std::vector<double>& y,
                    const LossWeights& w);

// KL from the predicted Dirichlet to an explicit target Dirichlet.
// Gradient: (alpha_k - beta_k) trigamma(alpha_k) - (alpha0 - beta0) trigamma(alpha0).
LossValue loss_kl_strengthened(const ConcentrationVector& cv, const ConcentrationVector& target);

// Evidence-masking KL: misleading-class evidence is pulled toward 1 while the
// true class coordinate is masked out (its gradient is identically zero).
LossValue loss_kl_original(const ConcentrationVector& cv, const std::vector<double>& y);

// Squared distance between the strong- and weak-branch concentrations.
// Gradient is with respect to the strong branch; the weak-branch gradient is
// its negation.
LossValue loss_consistency(const ConcentrationVector& cv_strong,
                           const ConcentrationVector& cv_weak);

// Cross entropy of logits against a one-hot target, stabilized by
// max-subtraction. Gradient is softmax(logits) - y.
LossValue loss_ce(const std::vector<double>& logits, const std::vector<double>& y);

// FixMatch: if the weak-branch softmax confidence clears tau, cross entropy
// of the strong branch against the hard weak pseudo-label; otherwise zero.
// Gradient is with respect to the strong logits only; the weak branch is a
// stopped gradient.
LossValue loss_fixmatch(const std::vector<double>& logits_weak,
                        const std::vector<double>& logits_strong, double tau);

struct LabeledBatch {
  std::vector<ConcentrationVector> alpha;
  std::vector<std::vector<double>> y;  // one-hot rows
};

struct UnlabeledBatch {
  std::vector<ConcentrationVector> alpha;
};

// Combined detector loss over a labeled and an unlabeled batch:
//   lambda_pedl * mean_l(pedl + kl_to_boosted_target)
// + lambda_nedl * mean_u(nedl + kl_to_ones)
// Per-sample gradients come back already weighted by their lambda / batch size.
struct AnoLossValue {
  double value = 0.0;
  double pedl = 0.0;          // unweighted batch means of the four parts
  double kl_labeled = 0.0;
  double nedl = 0.0;
  double kl_unlabeled = 0.0;
  std::vector<std::vector<double>> grad_labeled;
  std::vector<std::vector<double>> grad_unlabeled;
};

AnoLossValue loss_ano(const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                      const LossWeights& w);

// One optimization step's model outputs. The detector losses are evaluated on
// the weak branch; the strong branch enters through the consistency term and
// the FixMatch term on the selected inliers.
struct AnedlBatch {
  // labeled samples
  std::vector<std::vector<double>> labeled_logits;
  std::vector<ConcentrationVector> labeled_alpha;
  std::vector<std::vector<double>> labels;  // one-hot rows
  // unlabeled samples, both augmentation branches
  std::vector<std::vector<double>> unlabeled_logits_weak;
  std::vector<std::vector<double>> unlabeled_logits_strong;
  std::vector<ConcentrationVector> unlabeled_alpha_weak;
  std::vector<ConcentrationVector> unlabeled_alpha_strong;
  // positions (into the unlabeled batch) of the samples currently selected as
  // inliers; only these receive the FixMatch term
  std::vector<std::size_t> selected;
};

struct AnedlTerms {
  double ce = 0.0;
  double fm = 0.0;
  double pedl = 0.0;
  double kl_labeled = 0.0;
  double nedl = 0.0;
  double kl_unlabeled = 0.0;
  double con = 0.0;
  double ano = 0.0;    // lambda-weighted combination of the four detector parts
  double total = 0.0;  // ce + fm + ano + lambda_con * con
};

struct AnedlLossValue {
  AnedlTerms terms;
  std::vector<std::vector<double>> grad_labeled_logits;
  std::vector<std::vector<double>> grad_labeled_alpha;
  std::vector<std::vector<double>> grad_unlabeled_alpha_weak;
  std::vector<std::vector<double>> grad_unlabeled_alpha_strong;
  std::vector<std::vector<double>> grad_unlabeled_logits_strong;  // zero off the selected rows
};

AnedlLossValue loss_anedl(const AnedlBatch& batch, const LossWeights& w);

}  // namespace anedl

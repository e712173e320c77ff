#pragma once

#include <cstddef>
#include <vector>

#include "anedl/dirichlet.hpp"

namespace anedl {

struct ScoredSample {
  double score = 0.0;  // higher means more inlier-like
  bool inlier = false;
};

// Probability that a random inlier outscores a random outlier, ties counting
// half. Computed by rank sum with midranks, O(n log n).
double auroc(const std::vector<ScoredSample>& samples);

// Fraction of mismatches between predicted and true class indices.
double error_rate(const std::vector<std::size_t>& predicted,
                  const std::vector<std::size_t>& truth);

// Open-set inlier score of a prediction: the mass of its m largest
// concentration entries.
double score_inference(const ConcentrationVector& cv, std::size_t m);

}  // namespace anedl

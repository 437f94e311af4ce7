#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grm/types.hpp"

namespace grm {

enum class ApMode {
  kPositiveRanks,  // mean of precision@k over the ranks of positives
  kElevenPoint,    // interpolated precision at recall 0, 0.1, ..., 1
};

// What a class column is ranked by when computing AP. Softmax cross-entropy
// fixes logits only up to a per-sample shift, so raw scores are not
// comparable across samples; their softmax probabilities are.
enum class ApRanking {
  kProbability,
  kScore,
};

struct Metrics {
  // nullopt for classes with no samples; those are excluded from the mAP.
  std::vector<std::optional<Real>> per_class_recall;
  std::vector<std::optional<Real>> per_class_ap;
  Real map = 0;
  Real accuracy = 0;
  std::vector<std::string> warnings;
};

// Ranks by score descending; equal scores keep index order.
Real average_precision(std::span<const Real> scores, std::span<const bool> positives,
                       ApMode mode = ApMode::kPositiveRanks);

// Index of the largest score, first one on ties.
int argmax(const Vector& scores);

// `scores[k]` is the M-vector of logits for sample k. Accuracy and recall
// depend only on the argmax; AP ranks by `ranking`.
Metrics compute_metrics(std::span<const Vector> scores, std::span<const int> labels,
                        int classes, ApMode mode = ApMode::kPositiveRanks,
                        ApRanking ranking = ApRanking::kProbability);

}  // namespace grm

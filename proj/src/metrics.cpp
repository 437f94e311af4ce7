#include "grm/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "grm/core_math.hpp"

namespace grm {

Real average_precision(std::span<const Real> scores, std::span<const bool> positives,
                       ApMode mode) {
  if (scores.size() != positives.size()) {
    throw ShapeError("average_precision: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(positives.size()) + " labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto total = static_cast<Real>(std::count(positives.begin(), positives.end(), true));
  if (total == 0) return 0;

  std::vector<Real> precision;
  std::vector<Real> recall;
  Real hits = 0;
  Real sum = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positives[order[rank]]) continue;
    hits += 1;
    const Real p = hits / static_cast<Real>(rank + 1);
    sum += p;
    precision.push_back(p);
    recall.push_back(hits / total);
  }
  if (mode == ApMode::kPositiveRanks) return sum / total;

  Real interpolated = 0;
  for (int step = 0; step <= 10; ++step) {
    const Real level = step / 10.0;
    Real best = 0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= level - 1e-12) best = std::max(best, precision[i]);
    }
    interpolated += best;
  }
  return interpolated / 11.0;
}

int argmax(const Vector& scores) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return static_cast<int>(best);
}

Metrics compute_metrics(std::span<const Vector> scores, std::span<const int> labels,
                        int classes, ApMode mode, ApRanking ranking) {
  if (scores.empty()) throw ValidationError("compute_metrics: empty dataset");
  if (scores.size() != labels.size()) {
    throw ShapeError("compute_metrics: " + std::to_string(scores.size()) + " score vectors vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<int> support(classes, 0);
  std::vector<int> correct(classes, 0);
  int total_correct = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (scores[k].size() != classes) {
      throw ShapeError("compute_metrics: sample " + std::to_string(k) + " has " +
                       std::to_string(scores[k].size()) + " scores, expected " +
                       std::to_string(classes));
    }
    if (labels[k] < 0 || labels[k] >= classes) {
      throw IndexError("compute_metrics: label " + std::to_string(labels[k]) + " out of range");
    }
    ++support[labels[k]];
    if (argmax(scores[k]) == labels[k]) {
      ++correct[labels[k]];
      ++total_correct;
    }
  }

  Metrics out;
  out.accuracy = static_cast<Real>(total_correct) / static_cast<Real>(n);
  std::vector<Vector> ranked;
  ranked.reserve(n);
  for (const auto& s : scores) ranked.push_back(ranking == ApRanking::kProbability ? softmax(s) : s);
  std::vector<Real> column(n);
  // std::vector<bool> has no contiguous storage for a span
  auto positives = std::make_unique<bool[]>(n);
  Real ap_sum = 0;
  int defined = 0;
  for (int c = 0; c < classes; ++c) {
    if (support[c] == 0) {
      out.per_class_recall.emplace_back();
      out.per_class_ap.emplace_back();
      out.warnings.push_back("class " + std::to_string(c) +
                             " has no samples; recall and AP undefined, excluded from mAP");
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) column[k] = ranked[k](c);
    for (std::size_t k = 0; k < n; ++k) positives[k] = labels[k] == c;
    const Real ap =
        average_precision(column, std::span<const bool>(positives.get(), n), mode);
    out.per_class_recall.emplace_back(static_cast<Real>(correct[c]) / support[c]);
    out.per_class_ap.emplace_back(ap);
    ap_sum += ap;
    ++defined;
  }
  out.map = defined > 0 ? ap_sum / defined : 0;
  return out;
}

}  // namespace grm

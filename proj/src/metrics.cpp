#include "alearn/metrics.hpp"

#include <string>

namespace alearn {

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("accuracy: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " labels");
  }
  if (predicted.empty()) throw PreconditionError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double auc(std::span<const double> scores, std::span<const int> binary_labels) {
  if (scores.size() != binary_labels.size()) {
    throw ShapeError("auc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(binary_labels.size()) + " labels");
  }
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : binary_labels) {
    if (y == 0) {
      ++n_neg;
    } else if (y == 1) {
      ++n_pos;
    } else {
      throw ShapeError("auc: labels must be 0 or 1, got " + std::to_string(y));
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw PreconditionError("auc: undefined without both classes present");
  }
  double credit = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (binary_labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (binary_labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        credit += 1.0;
      } else if (scores[i] == scores[j]) {
        credit += 0.5;
      }
    }
  }
  return credit / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::optional<double> labels_to_reach(std::span<const CurvePoint> curve, double target) {
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].pct_labeled < curve[i - 1].pct_labeled) {
      throw PreconditionError("labels_to_reach: curve must be sorted by pct_labeled");
    }
  }
  for (const CurvePoint& pt : curve) {
    if (pt.accuracy >= target) return pt.pct_labeled;
  }
  return std::nullopt;
}

}  // namespace alearn

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "alearn/errors.hpp"

namespace alearn {

// Fraction of exact matches. Lengths must agree and be at least 1.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

// Mann-Whitney statistic P(score_pos > score_neg) + 0.5 P(tie) by exact
// pair counting. Labels must be 0/1 with both classes present.
double auc(std::span<const double> scores, std::span<const int> binary_labels);

struct CurvePoint {
  double pct_labeled = 0.0;
  double accuracy = 0.0;
};

// Smallest pct_labeled whose accuracy meets the target; nullopt if the
// curve never reaches it. The curve must be sorted by pct_labeled.
std::optional<double> labels_to_reach(std::span<const CurvePoint> curve, double target);

}  // namespace alearn

#pragma once

#include <span>
#include <vector>

#include "emobridge/corpus/labels.hpp"

namespace emobridge::metrics {

using corpus::SpoofLabel;

/// Detection scores (higher = more likely spoof) with their ground truth.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<SpoofLabel> labels;
};

struct ErrorRates {
  double false_acceptance;  // bonafide classified as spoof
  double false_rejection;   // spoof classified as bonafide
};

/// Rates when "spoof" is predicted for score >= threshold.
ErrorRates error_rates_at(const ScoredSet& set, double threshold);

/// Equal error rate.
///
/// Thresholds sweep the sorted unique scores plus +inf; at threshold t a trial
/// is called spoof iff score >= t. Walking the thresholds upward, FAR falls and
/// FRR rises. If some threshold has FAR == FRR that value is returned;
/// otherwise the (FAR, FRR) polyline is linearly interpolated across the
/// bracketing pair of thresholds and the point where FAR == FRR is returned.
/// The result is exactly invariant under strictly monotone score transforms
/// and under (scores, labels) -> (-scores, swapped labels).
///
/// Throws InvalidInput unless both classes are present and lengths match.
double eer(const ScoredSet& set);

/// EER plus the threshold at (or just above) the crossing.
struct EerPoint {
  double eer;
  double threshold;
};
EerPoint eer_point(const ScoredSet& set);

}  // namespace emobridge::metrics

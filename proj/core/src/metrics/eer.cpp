#include "emobridge/metrics/eer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emobridge/error.hpp"

namespace emobridge::metrics {

namespace {

void check(const ScoredSet& set) {
  if (set.scores.size() != set.labels.size()) throw InvalidInput("eer: scores and labels differ in length");
  std::size_t spoof = 0;
  for (auto label : set.labels) spoof += label == SpoofLabel::spoof ? 1 : 0;
  if (spoof == 0 || spoof == set.labels.size()) throw InvalidInput("eer: both classes must be present");
  for (double s : set.scores) {
    if (std::isnan(s)) throw InvalidInput("eer: NaN score");
  }
}

}  // namespace

ErrorRates error_rates_at(const ScoredSet& set, double threshold) {
  check(set);
  std::size_t bona = 0, spoof = 0, false_accept = 0, false_reject = 0;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    const bool called_spoof = set.scores[i] >= threshold;
    if (set.labels[i] == SpoofLabel::bonafide) {
      ++bona;
      false_accept += called_spoof ? 1 : 0;
    } else {
      ++spoof;
      false_reject += called_spoof ? 0 : 1;
    }
  }
  return {static_cast<double>(false_accept) / static_cast<double>(bona),
          static_cast<double>(false_reject) / static_cast<double>(spoof)};
}

EerPoint eer_point(const ScoredSet& set) {
  check(set);
  std::vector<std::pair<double, bool>> trials;  // (score, is_spoof)
  trials.reserve(set.scores.size());
  std::size_t n_bona = 0, n_spoof = 0;
  for (std::size_t i = 0; i < set.scores.size(); ++i) {
    const bool is_spoof = set.labels[i] == SpoofLabel::spoof;
    trials.emplace_back(set.scores[i], is_spoof);
    (is_spoof ? n_spoof : n_bona) += 1;
  }
  std::sort(trials.begin(), trials.end());

  // Counts strictly below the current threshold.
  std::size_t bona_below = 0, spoof_below = 0;
  double prev_far = 1.0, prev_frr = 0.0;
  std::size_t i = 0;
  while (true) {
    const bool sentinel = i == trials.size();
    const double threshold = sentinel ? std::numeric_limits<double>::infinity() : trials[i].first;
    const double far = static_cast<double>(n_bona - bona_below) / static_cast<double>(n_bona);
    const double frr = static_cast<double>(spoof_below) / static_cast<double>(n_spoof);
    if (far == frr) return {(far + frr) / 2.0, threshold};
    if (far < frr) {
      // Crossing of the segment (prev_far, prev_frr) -> (far, frr) with FAR == FRR.
      const double numerator = prev_far * frr - far * prev_frr;
      const double denominator = (prev_far - prev_frr) - (far - frr);
      return {numerator / denominator, threshold};
    }
    prev_far = far;
    prev_frr = frr;
    // Advance past all trials tied at this threshold.
    while (i < trials.size() && trials[i].first == threshold) {
      (trials[i].second ? spoof_below : bona_below) += 1;
      ++i;
    }
  }
}

double eer(const ScoredSet& set) { return eer_point(set).eer; }

}  // namespace emobridge::metrics

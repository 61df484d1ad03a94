#pragma once

#include <map>
#include <span>

namespace emobridge::metrics {

/// Fraction of positions where prediction == label.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Sample-level accuracy, i.e. the support-weighted mean of per-class recalls.
double weighted_accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Macro mean of per-class recall over the classes present in labels.
double unweighted_accuracy(std::span<const int> predictions, std::span<const int> labels);

struct ClassStats {
  std::size_t support = 0;
  std::size_t correct = 0;
  double recall() const { return support ? static_cast<double>(correct) / static_cast<double>(support) : 0.0; }
};

std::map<int, ClassStats> per_class(std::span<const int> predictions, std::span<const int> labels);

}  // namespace emobridge::metrics

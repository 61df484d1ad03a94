#include "emobridge/metrics/accuracy.hpp"

#include "emobridge/error.hpp"

namespace emobridge::metrics {

namespace {

void check(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw InvalidInput("accuracy: length mismatch");
  if (labels.empty()) throw InvalidInput("accuracy: empty input");
}

}  // namespace

std::map<int, ClassStats> per_class(std::span<const int> predictions, std::span<const int> labels) {
  check(predictions, labels);
  std::map<int, ClassStats> stats;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& s = stats[labels[i]];
    ++s.support;
    s.correct += predictions[i] == labels[i] ? 1 : 0;
  }
  return stats;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check(predictions, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double weighted_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  return accuracy(predictions, labels);
}

double unweighted_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  const auto stats = per_class(predictions, labels);
  double sum = 0.0;
  for (const auto& [label, s] : stats) sum += s.recall();
  return sum / static_cast<double>(stats.size());
}

}  // namespace emobridge::metrics

#include "emobridge/diagnostics/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "emobridge/error.hpp"

namespace emobridge::diagnostics {

std::string_view to_string(Grouping grouping) {
  switch (grouping) {
    case Grouping::speaker: return "speaker";
    case Grouping::emotion: return "emotion";
    case Grouping::content: return "content";
  }
  return "?";
}

double mean_silhouette(const MatrixRM& points, std::span<const std::string> groups) {
  const Eigen::Index n = points.rows();
  if (static_cast<std::size_t>(n) != groups.size()) throw InvalidInput("silhouette: points and labels differ in length");
  std::map<std::string, int> ids;
  std::vector<int> label(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    label[static_cast<std::size_t>(i)] = ids.emplace(groups[static_cast<std::size_t>(i)], static_cast<int>(ids.size())).first->second;
  }
  const std::size_t k = ids.size();
  if (k < 2) throw InvalidInput("silhouette: need at least 2 groups, got " + std::to_string(k));
  if (!points.allFinite()) throw NumericalError("silhouette: non-finite points");

  std::vector<std::size_t> size(k, 0);
  for (int g : label) ++size[static_cast<std::size_t>(g)];

  double total = 0.0;
  std::vector<double> sums(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto gi = static_cast<std::size_t>(label[static_cast<std::size_t>(i)]);
    if (size[gi] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(label[static_cast<std::size_t>(j)])] += (points.row(i) - points.row(j)).norm();
    }
    const double a = sums[gi] / static_cast<double>(size[gi] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < k; ++g) {
      if (g != gi) b = std::min(b, sums[g] / static_cast<double>(size[g]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

ForgettingScore forgetting_score(const MatrixRM& before, const MatrixRM& after, std::span<const std::string> groups,
                                 Grouping grouping) {
  if (before.rows() != after.rows()) {
    throw InvalidInput("forgetting_score: before and after cover different utterance counts");
  }
  return {grouping, mean_silhouette(before, groups), mean_silhouette(after, groups)};
}

}  // namespace emobridge::diagnostics

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emobridge/matrix.hpp"

namespace emobridge::diagnostics {

enum class Grouping { speaker, emotion, content };
std::string_view to_string(Grouping grouping);

/// Mean silhouette coefficient with Euclidean distance. Points alone in their
/// group score 0. Throws InvalidInput for fewer than 2 groups.
double mean_silhouette(const MatrixRM& points, std::span<const std::string> groups);

struct ForgettingScore {
  Grouping grouping = Grouping::speaker;
  double cluster_quality_before = 0.0;
  double cluster_quality_after = 0.0;
};

/// Silhouette of the same utterances before and after bridging under one grouping.
ForgettingScore forgetting_score(const MatrixRM& before, const MatrixRM& after, std::span<const std::string> groups,
                                 Grouping grouping);

}  // namespace emobridge::diagnostics

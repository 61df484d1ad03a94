#pragma once

#include <string>
#include <vector>

#include "emobridge/metrics/eer.hpp"

namespace emobridge::metrics {

struct ScoreRow {
  std::string id;
  double score = 0.0;
  SpoofLabel label = SpoofLabel::bonafide;
};

// CSV with header "id,score,label", label in {bonafide, spoof}.
void write_score_file(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_score_file(const std::string& path);
ScoredSet to_scored_set(const std::vector<ScoreRow>& rows);

}  // namespace emobridge::metrics

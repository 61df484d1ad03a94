#include "emobridge/metrics/score_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "emobridge/binary_io.hpp"
#include "emobridge/corpus/manifest.hpp"
#include "emobridge/error.hpp"

namespace emobridge::metrics {

void write_score_file(const std::string& path, const std::vector<ScoreRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "id,score,label\n";
  for (const auto& row : rows) {
    out << corpus::csv_escape(row.id) << ',' << row.score << ',' << corpus::to_string(row.label) << '\n';
  }
  binary::write_file_atomically(path, out.str());
}

std::vector<ScoreRow> read_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("score file not found: " + path);
  std::string line;
  if (!std::getline(in, line) || (line != "id,score,label" && line != "id,score,label\r")) {
    throw FormatError(path + ": header must be 'id,score,label'");
  }
  std::vector<ScoreRow> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = corpus::split_csv_line(line);
    auto fail = [&](const std::string& reason) {
      return FormatError(path + ": row " + std::to_string(row_number) + ": " + reason);
    };
    if (fields.size() != 3) throw fail("expected 3 fields");
    ScoreRow row;
    row.id = fields[0];
    try {
      std::size_t used = 0;
      row.score = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw fail("bad score '" + fields[1] + "'");
      row.label = corpus::parse_spoof_label(fields[2]);
    } catch (const std::logic_error&) {
      throw fail("bad score '" + fields[1] + "'");
    } catch (const InvalidInput& e) {
      throw fail(e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ScoredSet to_scored_set(const std::vector<ScoreRow>& rows) {
  ScoredSet set;
  for (const auto& row : rows) {
    set.scores.push_back(row.score);
    set.labels.push_back(row.label);
  }
  return set;
}

}  // namespace emobridge::metrics

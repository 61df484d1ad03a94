#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emobridge/metrics/score_file.hpp"

namespace emobridge::probe {

enum class Condition { pretrained, emotion_fused };
std::string_view to_string(Condition condition);
Condition parse_condition(std::string_view name);

struct LayerResult {
  std::size_t layer_index = 0;
  double eer = 0.0;
  double accuracy = 0.0;
};

struct SourceAccuracy {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t support = 0;
};

struct ProbeReport {
  std::string dataset;
  std::string model;
  Condition condition = Condition::pretrained;
  std::vector<LayerResult> per_layer;
  double layer_avg_eer = 0.0;
  double layer_avg_acc = 0.0;
  // Breakdown on the test split for the best layer (highest accuracy, then lowest EER, then lowest index).
  std::map<std::string, SourceAccuracy> per_source;
  std::size_t source_layer = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::map<std::string, std::string> checksums;
  std::vector<std::string> notes;
  // Test-split scores per layer. Not part of the JSON; exported as score files.
  std::vector<std::vector<metrics::ScoreRow>> scores;

  /// Recomputes the layer averages from per_layer.
  void finalize_averages();
};

std::string to_json(const ProbeReport& report);
ProbeReport report_from_json(const std::string& text);
/// layer,eer,accuracy rows followed by a final "avg" row.
std::string per_layer_csv(const ProbeReport& report);

// Table-II shape: one row per (dataset, model) with both conditions side by side.
struct ComparisonRow {
  std::string dataset;
  std::string model;
  double pretrained_eer = 0.0;
  double pretrained_acc = 0.0;
  double fused_eer = 0.0;
  double fused_acc = 0.0;
};
inline constexpr std::string_view kComparisonHeader =
    "dataset,model,pretrained_eer,pretrained_acc,emotion_fused_eer,emotion_fused_acc";
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> parse_comparison_csv(const std::string& text);
/// Pairs pretrained and emotion_fused reports that share (dataset, model).
std::vector<ComparisonRow> compare(const std::vector<ProbeReport>& reports);

// Table-III shape: one row per source, one column per (model, condition).
struct SourceTable {
  std::vector<std::string> columns;  // e.g. "TOY/pretrained"
  std::vector<std::string> sources;
  std::vector<std::vector<double>> accuracy;  // [source][column]; NaN when absent
};
std::string source_table_csv(const SourceTable& table);
SourceTable parse_source_table_csv(const std::string& text);
SourceTable source_table(const std::vector<ProbeReport>& reports);

}  // namespace emobridge::probe

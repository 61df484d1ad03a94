#include "emobridge/probe/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "emobridge/corpus/manifest.hpp"
#include "emobridge/error.hpp"

namespace emobridge::probe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Shortest text that parses back to the same double.
std::string exact(double value) {
  if (std::isnan(value)) return "";
  char buffer[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof buffer, "%.*g", precision, value);
    if (std::strtod(buffer, nullptr) == value) break;
  }
  return buffer;
}

double parse_number(const std::string& field, std::size_t row) {
  if (field.empty()) return kNaN;
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') {
    throw FormatError("row " + std::to_string(row) + ": '" + field + "' is not a number");
  }
  return value;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(corpus::split_csv_line(line));
  }
  return rows;
}

}  // namespace

std::string_view to_string(Condition condition) {
  return condition == Condition::pretrained ? "pretrained" : "emotion_fused";
}

Condition parse_condition(std::string_view name) {
  if (name == "pretrained") return Condition::pretrained;
  if (name == "emotion_fused") return Condition::emotion_fused;
  throw InvalidInput("unknown condition '" + std::string(name) + "' (expected pretrained or emotion_fused)");
}

void ProbeReport::finalize_averages() {
  if (per_layer.empty()) {
    layer_avg_eer = layer_avg_acc = kNaN;
    return;
  }
  double eer_sum = 0.0, acc_sum = 0.0;
  for (const auto& layer : per_layer) {
    eer_sum += layer.eer;
    acc_sum += layer.accuracy;
  }
  layer_avg_eer = eer_sum / static_cast<double>(per_layer.size());
  layer_avg_acc = acc_sum / static_cast<double>(per_layer.size());
}

std::string to_json(const ProbeReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : report.per_layer) {
    layers.push_back({{"layer", l.layer_index}, {"eer", l.eer}, {"accuracy", l.accuracy}});
  }
  nlohmann::json sources = nlohmann::json::object();
  for (const auto& [name, s] : report.per_source) {
    sources[name] = {{"accuracy", s.accuracy}, {"correct", s.correct}, {"support", s.support}};
  }
  nlohmann::json doc = {{"dataset", report.dataset},
                        {"model", report.model},
                        {"condition", to_string(report.condition)},
                        {"per_layer", layers},
                        {"layer_avg_eer", report.layer_avg_eer},
                        {"layer_avg_acc", report.layer_avg_acc},
                        {"per_source", sources},
                        {"source_layer", report.source_layer},
                        {"train_size", report.train_size},
                        {"test_size", report.test_size},
                        {"checksums", report.checksums},
                        {"notes", report.notes}};
  return doc.dump(2) + "\n";
}

ProbeReport report_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    ProbeReport report;
    report.dataset = doc.value("dataset", std::string{});
    report.model = doc.value("model", std::string{});
    report.condition = parse_condition(doc.at("condition").get<std::string>());
    for (const auto& l : doc.at("per_layer")) {
      report.per_layer.push_back(
          {l.at("layer").get<std::size_t>(), l.at("eer").get<double>(), l.at("accuracy").get<double>()});
    }
    report.layer_avg_eer = doc.at("layer_avg_eer").get<double>();
    report.layer_avg_acc = doc.at("layer_avg_acc").get<double>();
    for (const auto& [name, s] : doc.at("per_source").items()) {
      report.per_source[name] = {s.at("accuracy").get<double>(), s.at("correct").get<std::size_t>(),
                                 s.at("support").get<std::size_t>()};
    }
    report.source_layer = doc.value("source_layer", std::size_t{0});
    report.train_size = doc.value("train_size", std::size_t{0});
    report.test_size = doc.value("test_size", std::size_t{0});
    report.checksums = doc.value("checksums", std::map<std::string, std::string>{});
    report.notes = doc.value("notes", std::vector<std::string>{});
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("probe report: ") + e.what());
  }
}

std::string per_layer_csv(const ProbeReport& report) {
  std::string out = "layer,eer,accuracy\n";
  for (const auto& l : report.per_layer) {
    out += std::to_string(l.layer_index) + "," + exact(l.eer) + "," + exact(l.accuracy) + "\n";
  }
  out += "avg," + exact(report.layer_avg_eer) + "," + exact(report.layer_avg_acc) + "\n";
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = std::string(kComparisonHeader) + "\n";
  for (const auto& r : rows) {
    out += corpus::csv_escape(r.dataset) + "," + corpus::csv_escape(r.model) + "," + exact(r.pretrained_eer) + "," +
           exact(r.pretrained_acc) + "," + exact(r.fused_eer) + "," + exact(r.fused_acc) + "\n";
  }
  return out;
}

std::vector<ComparisonRow> parse_comparison_csv(const std::string& text) {
  const auto rows = csv_rows(text);
  if (rows.empty()) throw FormatError("comparison table: empty");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kComparisonHeader) throw FormatError("comparison table: unexpected header '" + header + "'");
  std::vector<ComparisonRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != 6) throw FormatError("comparison table row " + std::to_string(r + 1) + ": expected 6 fields");
    out.push_back({f[0], f[1], parse_number(f[2], r + 1), parse_number(f[3], r + 1), parse_number(f[4], r + 1),
                   parse_number(f[5], r + 1)});
  }
  return out;
}

std::vector<ComparisonRow> compare(const std::vector<ProbeReport>& reports) {
  std::vector<ComparisonRow> rows;
  auto row_for = [&](const ProbeReport& report) -> ComparisonRow& {
    for (auto& row : rows) {
      if (row.dataset == report.dataset && row.model == report.model) return row;
    }
    rows.push_back({report.dataset, report.model, kNaN, kNaN, kNaN, kNaN});
    return rows.back();
  };
  for (const auto& report : reports) {
    auto& row = row_for(report);
    if (report.condition == Condition::pretrained) {
      row.pretrained_eer = report.layer_avg_eer;
      row.pretrained_acc = report.layer_avg_acc;
    } else {
      row.fused_eer = report.layer_avg_eer;
      row.fused_acc = report.layer_avg_acc;
    }
  }
  return rows;
}

std::string source_table_csv(const SourceTable& table) {
  std::string out = "source";
  for (const auto& column : table.columns) out += "," + corpus::csv_escape(column);
  out += "\n";
  for (std::size_t s = 0; s < table.sources.size(); ++s) {
    out += corpus::csv_escape(table.sources[s]);
    for (double value : table.accuracy[s]) out += "," + exact(value);
    out += "\n";
  }
  return out;
}

SourceTable parse_source_table_csv(const std::string& text) {
  const auto rows = csv_rows(text);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "source") throw FormatError("source table: bad header");
  SourceTable table;
  table.columns.assign(rows[0].begin() + 1, rows[0].end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw FormatError("source table row " + std::to_string(r + 1) + ": expected " +
                        std::to_string(rows[0].size()) + " fields");
    }
    table.sources.push_back(rows[r][0]);
    std::vector<double> values;
    for (std::size_t c = 1; c < rows[r].size(); ++c) values.push_back(parse_number(rows[r][c], r + 1));
    table.accuracy.push_back(std::move(values));
  }
  return table;
}

SourceTable source_table(const std::vector<ProbeReport>& reports) {
  SourceTable table;
  std::set<std::string> attacks;
  bool has_real = false;
  for (const auto& report : reports) {
    table.columns.push_back(report.model + "/" + std::string(to_string(report.condition)));
    for (const auto& [name, entry] : report.per_source) {
      if (name == "Real") has_real = true;
      else attacks.insert(name);
    }
  }
  table.sources.assign(attacks.begin(), attacks.end());
  if (has_real) table.sources.push_back("Real");
  for (const auto& source : table.sources) {
    std::vector<double> row;
    for (const auto& report : reports) {
      auto it = report.per_source.find(source);
      row.push_back(it == report.per_source.end() ? kNaN : it->second.accuracy);
    }
    table.accuracy.push_back(std::move(row));
  }
  return table;
}

}  // namespace emobridge::probe

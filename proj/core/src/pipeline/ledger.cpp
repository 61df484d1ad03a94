#include "emobridge/pipeline/ledger.hpp"

#include <json.hpp>

#include <filesystem>

#include "emobridge/binary_io.hpp"
#include "emobridge/checksum.hpp"
#include "emobridge/error.hpp"

namespace emobridge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

RunLedger RunLedger::open(const std::string& run_dir, const std::string& config_checksum) {
  RunLedger ledger;
  ledger.run_dir_ = run_dir;
  ledger.config_checksum_ = config_checksum;
  const fs::path path = fs::path(run_dir) / "ledger.json";
  if (!fs::exists(path)) return ledger;
  json doc;
  try {
    doc = json::parse(binary::read_file(path.string()));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto recorded = doc.value("config_checksum", std::string{});
  if (recorded != config_checksum) {
    throw ConfigError("run directory " + run_dir + " was produced by a different config (ledger " +
                      recorded.substr(0, 12) + ", current " + config_checksum.substr(0, 12) +
                      "); use a fresh --out directory");
  }
  for (const auto& [name, s] : doc.at("stages").items()) {
    StageRecord record;
    record.stage = name;
    record.parameters = s.value("parameters", std::map<std::string, std::string>{});
    record.artifacts = s.value("artifacts", std::map<std::string, std::string>{});
    record.wall_seconds = s.value("wall_seconds", 0.0);
    ledger.stages_.emplace(name, std::move(record));
  }
  return ledger;
}

const StageRecord* RunLedger::find(const std::string& stage) const {
  auto it = stages_.find(stage);
  return it == stages_.end() ? nullptr : &it->second;
}

std::string RunLedger::hash(const std::string& relative_path) const {
  return sha256_file((fs::path(run_dir_) / relative_path).string());
}

bool RunLedger::up_to_date(const std::string& stage) const {
  const auto* record = find(stage);
  if (!record) return false;
  for (const auto& [path, digest] : record->artifacts) {
    if (!fs::exists(fs::path(run_dir_) / path) || hash(path) != digest) return false;
  }
  return true;
}

void RunLedger::record(StageRecord record) {
  const std::string name = record.stage;
  stages_[name] = std::move(record);
}

std::vector<std::string> RunLedger::violations() const {
  std::vector<std::string> out;
  std::map<std::string, std::pair<std::string, std::string>> first;  // key -> (value, stage)
  for (const auto& [name, record] : stages_) {
    for (const auto& [key, value] : record.parameters) {
      auto [it, inserted] = first.emplace(key, std::make_pair(value, name));
      if (!inserted && it->second.first != value) {
        out.push_back(key + " differs between stage " + it->second.second + " and stage " + name);
      }
    }
  }
  if (first.count("theta:emotion_fused") && (!find("bridge") || !find("bridge")->parameters.count("theta:emotion_fused"))) {
    out.push_back("theta:emotion_fused recorded without a bridge stage");
  }
  if (const auto* bridge = find("bridge")) {
    auto pre = bridge->parameters.find("theta:pretrained");
    auto post = bridge->parameters.find("theta:emotion_fused");
    if (pre != bridge->parameters.end() && post != bridge->parameters.end() && pre->second == post->second) {
      out.push_back("bridge stage left theta unchanged");
    }
  }
  return out;
}

std::string RunLedger::to_json() const {
  json stages = json::object();
  for (const auto& [name, record] : stages_) {
    stages[name] = {{"parameters", record.parameters},
                    {"artifacts", record.artifacts},
                    {"wall_seconds", record.wall_seconds}};
  }
  return json({{"config_checksum", config_checksum_}, {"stages", stages}}).dump(2) + "\n";
}

void RunLedger::save() const {
  binary::write_file_atomically((fs::path(run_dir_) / "ledger.json").string(), to_json());
}

}  // namespace emobridge::pipeline

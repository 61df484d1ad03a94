#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace emobridge::pipeline {

struct StageRecord {
  std::string stage;  // e.g. "extract:pretrained"
  // Parameter checksums seen at this stage boundary. Keys: "omega",
  // "theta:pretrained", "theta:emotion_fused", "phi".
  std::map<std::string, std::string> parameters;
  // Artifact path relative to the run directory -> SHA-256.
  std::map<std::string, std::string> artifacts;
  double wall_seconds = 0.0;
};

/// <out>/ledger.json. One run directory has exactly one config checksum; a
/// different config against existing artifacts is refused.
class RunLedger {
 public:
  /// Loads the ledger or starts an empty one. Throws ConfigError when the
  /// recorded config checksum differs (stale-artifact guard).
  static RunLedger open(const std::string& run_dir, const std::string& config_checksum);

  const std::string& config_checksum() const noexcept { return config_checksum_; }
  const std::map<std::string, StageRecord>& stages() const noexcept { return stages_; }
  const StageRecord* find(const std::string& stage) const;

  /// True when the stage is recorded and every artifact still has its recorded hash.
  bool up_to_date(const std::string& stage) const;

  void record(StageRecord record);
  void save() const;

  /// Hashes a file under the run directory.
  std::string hash(const std::string& relative_path) const;

  /// Violations of the checksum invariants: every parameter key must carry one
  /// value across all stages; "theta:emotion_fused" may first appear at "bridge".
  std::vector<std::string> violations() const;

  std::string to_json() const;

 private:
  std::string run_dir_;
  std::string config_checksum_;
  std::map<std::string, StageRecord> stages_;
};

}  // namespace emobridge::pipeline

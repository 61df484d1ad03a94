#pragma once

#include <functional>
#include <string>
#include <vector>

#include "emobridge/pipeline/config.hpp"
#include "emobridge/pipeline/ledger.hpp"
#include "emobridge/probe/report.hpp"

namespace emobridge::pipeline {

// Run directory layout, relative to output_dir.
namespace layout {
inline constexpr const char* kEmotionManifest = "manifests/emotion.csv";
inline constexpr const char* kSpoofManifest = "manifests/spoof.csv";
inline constexpr const char* kSyntheticCorpus = "corpus";
inline constexpr const char* kPretrainedBundle = "encoder/pretrained.ckpt";
inline constexpr const char* kBridgeDir = "bridge";
inline constexpr const char* kFusedBundle = "bridge/encoder.ckpt";
inline constexpr const char* kBridgeHead = "bridge/head.ckpt";
inline constexpr const char* kBridgeLog = "bridge/training_log.json";
inline constexpr const char* kBridgeEval = "bridge/eval.json";
std::string cache(probe::Condition condition, const std::string& corpus);  // corpus: "spoof" | "emotion"
std::string functional_cache(encoders::FunctionalSet set);
std::string probe_report(probe::Condition condition, const std::string& extension);
std::string functional_report(encoders::FunctionalSet set, const std::string& extension);
}  // namespace layout

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // up to date; nothing was rewritten
  std::vector<std::string> artifacts;
};

/// Drives the stages for one experiment directory. Each stage checks its
/// upstream artifacts (MissingArtifact names the stage to run first), skips
/// itself when its recorded artifacts are unchanged, and records parameter
/// checksums in the ledger.
class Pipeline {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit Pipeline(ExperimentConfig config, Logger log = {});

  const ExperimentConfig& config() const noexcept { return config_; }
  const RunLedger& ledger() const noexcept { return ledger_; }
  std::string path(const std::string& relative) const;

  StageOutcome ingest();
  StageOutcome extract(probe::Condition condition);
  StageOutcome bridge();
  StageOutcome probe(probe::Condition condition);
  StageOutcome diagnose();
  StageOutcome report();
  std::vector<StageOutcome> run_all();

 private:
  void require(const std::string& stage, std::initializer_list<std::string> artifacts) const;
  StageOutcome finish(StageRecord record, double seconds);
  void say(const std::string& line) const;

  ExperimentConfig config_;
  Logger log_;
  RunLedger ledger_;
};

}  // namespace emobridge::pipeline

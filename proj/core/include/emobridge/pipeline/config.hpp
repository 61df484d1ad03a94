#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emobridge/bridge/trainer.hpp"
#include "emobridge/corpus/labels.hpp"
#include "emobridge/corpus/splits.hpp"
#include "emobridge/corpus/synth.hpp"
#include "emobridge/encoders/bundle.hpp"
#include "emobridge/encoders/functionals.hpp"
#include "emobridge/probe/spoof_probe.hpp"

namespace emobridge::pipeline {

struct ManifestSource {
  std::string path;
  corpus::DatasetId dataset = corpus::DatasetId::SYNTH;
};

struct EncoderSpec {
  encoders::EncoderKind kind = encoders::EncoderKind::TOY;
  encoders::ToyEncoderConfig toy;
};

// Precomputed descriptors, one sidecar per utterance at <dir>/<id>.bin.
struct ExternalFunctionals {
  std::string dir;
  std::size_t length = 0;
};

struct DiagnosticsSpec {
  std::size_t attention_samples = 16;
  std::size_t attention_frames = 0;  // 0 = shortest utterance in the sample
  std::size_t embedding_samples = 60;
};

/// Parsed experiment file. Component seeds left unset in the file follow the
/// global seed, so --seed changes every stochastic stage at once.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string output_dir;
  EncoderSpec encoder;
  // Either a synthetic corpus or manifest files.
  std::optional<corpus::SynthConfig> synthetic;
  std::uint64_t synthetic_seed = 42;
  std::vector<ManifestSource> emotion_manifests;
  std::vector<ManifestSource> emotion_test_manifests;
  std::optional<ManifestSource> spoof_manifest;
  corpus::LabelOptions labels;
  corpus::SplitSpec splits;
  bridge::BridgeHyper bridge;
  probe::ProbeConfig probe;
  std::vector<encoders::FunctionalSet> functionals;
  std::optional<ExternalFunctionals> external_functionals;  // set iff functionals holds EXTERNAL
  DiagnosticsSpec diagnostics;

  // Canonical JSON of every resolved value; its SHA-256 is the config checksum.
  std::string canonical_json;
  std::string checksum;
};

/// Parses the JSON experiment file. seed_override replaces the global seed and
/// every seed derived from it; out_override replaces output_dir. Relative paths
/// resolve against the config file's directory. Throws ConfigError.
ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt,
                             const std::optional<std::string>& out_override = std::nullopt);
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              const std::optional<std::string>& out_override = std::nullopt);

}  // namespace emobridge::pipeline

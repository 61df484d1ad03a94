#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emobridge/bridge/bridge_model.hpp"
#include "emobridge/corpus/manifest.hpp"

namespace emobridge::bridge {

struct BridgeHyper {
  double learning_rate = 1e-5;
  std::size_t max_epochs = 40;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  // Stop after this many epochs without a dev-loss improvement. Unset = run all epochs.
  std::optional<std::size_t> early_stop_patience;
  double weight_decay = 0.01;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  // NaN when there is no dev split; selection then falls back to train loss.
  double dev_loss = 0.0;
  double dev_wa = 0.0;
  double dev_ua = 0.0;
};

struct TrainedBridge {
  BridgeModel model;
  std::vector<EpochRecord> log;
  double initial_train_loss = 0.0;
  double initial_dev_loss = 0.0;
  std::size_t best_epoch = 0;
  std::string theta_checksum_before;

  /// Train loss of the returned (best) checkpoint.
  double final_train_loss() const;
};

struct EmotionScores {
  double weighted_accuracy = 0.0;
  double unweighted_accuracy = 0.0;
  std::size_t count = 0;
};

/// Loads and front-ends every record of one split. Records must carry an emotion label.
std::vector<EmotionExample> load_emotion_examples(const encoders::EncoderBundle& bundle,
                                                  const corpus::CorpusManifest& manifest, corpus::Split split);

/// AdamW fine-tuning of theta and a fresh head phi on emotion recognition.
/// Batches are visited in a seeded per-epoch shuffle and updates run strictly in
/// sequence, so equal inputs give bit-identical parameters. Returns the epoch
/// with the lowest dev loss (earliest on ties).
TrainedBridge train_bridge(encoders::EncoderBundle bundle, std::span<const EmotionExample> train,
                           std::span<const EmotionExample> dev, const BridgeHyper& hyper,
                           const std::function<void(const EpochRecord&)>& on_epoch = {});

TrainedBridge train_bridge(encoders::EncoderBundle bundle, const corpus::CorpusManifest& manifest,
                           const BridgeHyper& hyper,
                           const std::function<void(const EpochRecord&)>& on_epoch = {});

/// WA (sample accuracy) and UA (macro recall).
EmotionScores evaluate(const BridgeModel& model, std::span<const EmotionExample> examples);
/// Evaluates on the test split of the manifest.
EmotionScores eval_weighted_accuracy(const BridgeModel& model, const corpus::CorpusManifest& manifest);

// Directory layout: encoder.ckpt (+ .json), head.ckpt, training_log.json.
void save_bridge(const std::string& dir, const TrainedBridge& trained);
TrainedBridge load_bridge(const std::string& dir);

std::string training_log_json(const TrainedBridge& trained);

}  // namespace emobridge::bridge

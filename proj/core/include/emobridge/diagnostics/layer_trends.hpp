#pragma once

#include <span>
#include <string>
#include <vector>

#include "emobridge/corpus/manifest.hpp"
#include "emobridge/encoders/feature_cache.hpp"
#include "emobridge/probe/spoof_probe.hpp"

namespace emobridge::diagnostics {

/// Pooled per-layer features with integer class labels for one task.
struct TaskData {
  std::vector<MatrixRM> train;  // per layer, N x D
  std::vector<int> train_labels;
  std::vector<MatrixRM> test;
  std::vector<int> test_labels;
};

struct LayerTrend {
  std::size_t layer = 0;
  double emotion_accuracy = 0.0;
  double spoof_accuracy = 0.0;
};

struct LayerTrends {
  std::vector<LayerTrend> layers;
  double spearman = 0.0;  // rank correlation of the two accuracy curves
};

/// Spearman correlation with average ranks for ties. NaN when either input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// One SVM per (layer, task) with the probe configuration; test-split accuracy.
LayerTrends dual_task_layer_trends(const TaskData& emotion, const TaskData& spoof, const probe::ProbeConfig& config = {});

TaskData emotion_task(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                      const probe::PoolingRule& rule = {});
TaskData spoof_task(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                    const probe::PoolingRule& rule = {});

/// layer,emotion_accuracy,spoof_accuracy rows then "spearman,<value>,".
std::string layer_trends_csv(const LayerTrends& trends);

}  // namespace emobridge::diagnostics

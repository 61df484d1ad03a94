#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emobridge/corpus/manifest.hpp"
#include "emobridge/encoders/feature_cache.hpp"
#include "emobridge/probe/pooling.hpp"
#include "emobridge/probe/report.hpp"
#include "emobridge/probe/svm.hpp"

namespace emobridge::probe {

struct ProbeConfig {
  SvmConfig svm;
  PoolingRule pooling;
};

/// Per-layer SVM on pooled features. Takes precomputed vectors only, so the
/// encoder cannot be touched while probing.
class SpoofProbe {
 public:
  static SpoofProbe fit(std::size_t layer_index, const MatrixRM& vectors, std::span<const corpus::SpoofLabel> labels,
                        const ProbeConfig& config = {});

  /// Signed decision value, positive toward spoof.
  double score(const Eigen::Ref<const VectorD>& vector) const;
  /// Spoof iff score > 0.
  corpus::SpoofLabel predict(const Eigen::Ref<const VectorD>& vector) const;

  std::size_t layer_index() const noexcept { return layer_; }
  Eigen::Index dim() const noexcept { return svm_.dim(); }
  std::size_t train_size() const noexcept { return train_size_; }
  const BinarySvm& svm() const noexcept { return svm_; }

 private:
  SpoofProbe(std::size_t layer, BinarySvm svm, std::size_t n) : layer_(layer), svm_(std::move(svm)), train_size_(n) {}
  std::size_t layer_;
  BinarySvm svm_;
  std::size_t train_size_;
};

/// Pooled per-layer matrices for one split of a manifest.
struct PooledSplit {
  std::vector<std::string> ids;
  std::vector<MatrixRM> layers;  // L matrices, N x D
};

/// Reads and pools every record of the split that passes keep(). Missing ids
/// are reported together in one NotFound error.
PooledSplit pool_split(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                       corpus::Split split, const PoolingRule& rule = {},
                       const std::function<bool(const corpus::UtteranceRecord&)>& keep = {});

/// Accuracy per attack id; bonafide trials are grouped under "Real", spoof
/// trials without an attack id under "unknown".
std::map<std::string, SourceAccuracy> per_source_breakdown(std::span<const corpus::SpoofLabel> predictions,
                                                           std::span<const corpus::SpoofLabel> labels,
                                                           std::span<const std::optional<std::string>> attack_ids);

/// Fits one probe per layer on the train split and evaluates the test split.
/// expected_layers, when given, must equal the cache's layer count.
ProbeReport probe_all_layers(const encoders::FeatureCache& cache, const corpus::CorpusManifest& spoof_manifest,
                             Condition condition, const ProbeConfig& config = {},
                             std::optional<std::size_t> expected_layers = std::nullopt);

}  // namespace emobridge::probe

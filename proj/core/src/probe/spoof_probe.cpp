#include "emobridge/probe/spoof_probe.hpp"

#include <algorithm>
#include <numeric>

#include "emobridge/error.hpp"
#include "emobridge/metrics/eer.hpp"

namespace emobridge::probe {

using corpus::SpoofLabel;

SpoofProbe SpoofProbe::fit(std::size_t layer_index, const MatrixRM& vectors, std::span<const SpoofLabel> labels,
                           const ProbeConfig& config) {
  if (static_cast<std::size_t>(vectors.rows()) != labels.size()) {
    throw InvalidInput("fit_probe: " + std::to_string(vectors.rows()) + " vectors but " +
                       std::to_string(labels.size()) + " labels");
  }
  std::vector<int> y;
  y.reserve(labels.size());
  for (auto label : labels) y.push_back(label == SpoofLabel::spoof ? 1 : -1);
  return SpoofProbe(layer_index, BinarySvm::fit(vectors, y, config.svm), labels.size());
}

double SpoofProbe::score(const Eigen::Ref<const VectorD>& vector) const { return svm_.decision(vector); }

SpoofLabel SpoofProbe::predict(const Eigen::Ref<const VectorD>& vector) const {
  return score(vector) > 0.0 ? SpoofLabel::spoof : SpoofLabel::bonafide;
}

PooledSplit pool_split(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                       corpus::Split split, const PoolingRule& rule,
                       const std::function<bool(const corpus::UtteranceRecord&)>& keep) {
  PooledSplit out;
  std::vector<std::string> missing;
  for (const auto* record : manifest.in_split(split)) {
    if (keep && !keep(*record)) continue;
    if (!cache.contains(record->id)) {
      missing.push_back(record->id);
      continue;
    }
    out.ids.push_back(record->id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 10) list += ", ...";
    throw NotFound(std::to_string(missing.size()) + " utterance(s) missing from cache " + cache.path() + ": " + list);
  }
  const auto n = static_cast<Eigen::Index>(out.ids.size());
  const auto d = static_cast<Eigen::Index>(cache.feature_dim());
  out.layers.assign(cache.layer_count(), MatrixRM(n, d));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto pooled = pool(cache.read(out.ids[static_cast<std::size_t>(r)]), rule);
    for (std::size_t l = 0; l < pooled.size(); ++l) out.layers[l].row(r) = pooled[l].transpose();
  }
  return out;
}

std::map<std::string, SourceAccuracy> per_source_breakdown(std::span<const SpoofLabel> predictions,
                                                           std::span<const SpoofLabel> labels,
                                                           std::span<const std::optional<std::string>> attack_ids) {
  if (predictions.size() != labels.size() || labels.size() != attack_ids.size()) {
    throw InvalidInput("per_source_breakdown: predictions, labels and attack ids differ in length");
  }
  std::map<std::string, SourceAccuracy> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::string source = labels[i] == SpoofLabel::bonafide ? "Real" : attack_ids[i].value_or("unknown");
    auto& entry = out[source];
    ++entry.support;
    if (predictions[i] == labels[i]) ++entry.correct;
  }
  for (auto& [source, entry] : out) {
    entry.accuracy = static_cast<double>(entry.correct) / static_cast<double>(entry.support);
  }
  return out;
}

ProbeReport probe_all_layers(const encoders::FeatureCache& cache, const corpus::CorpusManifest& spoof_manifest,
                             Condition condition, const ProbeConfig& config,
                             std::optional<std::size_t> expected_layers) {
  if (expected_layers && *expected_layers != cache.layer_count()) {
    throw InvalidInput("probe: cache has " + std::to_string(cache.layer_count()) + " layers, expected " +
                       std::to_string(*expected_layers));
  }
  if (!spoof_manifest.has_splits()) throw InvalidInput("probe: spoof manifest has no split assignment");
  auto labelled = [](const corpus::UtteranceRecord& r) { return r.spoof.has_value(); };
  const auto train = pool_split(cache, spoof_manifest, corpus::Split::train, config.pooling, labelled);
  const auto test = pool_split(cache, spoof_manifest, corpus::Split::test, config.pooling, labelled);
  if (test.ids.empty()) throw InvalidInput("probe: spoof test split is empty");

  auto labels_of = [&](const PooledSplit& split) {
    std::vector<SpoofLabel> labels;
    for (const auto& id : split.ids) labels.push_back(*spoof_manifest.find(id)->spoof);
    return labels;
  };
  const auto train_labels = labels_of(train);
  const auto test_labels = labels_of(test);
  std::vector<std::optional<std::string>> attacks;
  for (const auto& id : test.ids) attacks.push_back(spoof_manifest.find(id)->attack_id);

  ProbeReport report;
  report.condition = condition;
  report.train_size = train.ids.size();
  report.test_size = test.ids.size();
  std::vector<std::vector<SpoofLabel>> predictions(cache.layer_count());
  for (std::size_t l = 0; l < cache.layer_count(); ++l) {
    const auto probe = SpoofProbe::fit(l, train.layers[l], train_labels, config);
    metrics::ScoredSet scored{{}, test_labels};
    std::size_t correct = 0;
    auto& rows = report.scores.emplace_back();
    for (Eigen::Index r = 0; r < test.layers[l].rows(); ++r) {
      const double s = probe.score(test.layers[l].row(r).transpose());
      scored.scores.push_back(s);
      rows.push_back({test.ids[static_cast<std::size_t>(r)], s, test_labels[static_cast<std::size_t>(r)]});
      const auto predicted = s > 0.0 ? SpoofLabel::spoof : SpoofLabel::bonafide;
      predictions[l].push_back(predicted);
      if (predicted == test_labels[static_cast<std::size_t>(r)]) ++correct;
    }
    report.per_layer.push_back(
        {l, metrics::eer(scored), static_cast<double>(correct) / static_cast<double>(test_labels.size())});
  }
  report.finalize_averages();

  std::size_t best = 0;
  for (std::size_t l = 1; l < report.per_layer.size(); ++l) {
    const auto& a = report.per_layer[l];
    const auto& b = report.per_layer[best];
    if (a.accuracy > b.accuracy || (a.accuracy == b.accuracy && a.eer < b.eer)) best = l;
  }
  report.source_layer = best;
  report.per_source = per_source_breakdown(predictions[best], test_labels, attacks);
  report.notes.push_back("per_source uses layer " + std::to_string(best) +
                         " (highest test accuracy, then lowest EER, then lowest index)");
  return report;
}

}  // namespace emobridge::probe

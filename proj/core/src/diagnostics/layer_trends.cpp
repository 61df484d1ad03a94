#include "emobridge/diagnostics/layer_trends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "emobridge/error.hpp"
#include "emobridge/metrics/accuracy.hpp"

namespace emobridge::diagnostics {

namespace {

std::vector<double> ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank;
    i = j + 1;
  }
  return out;
}

double layer_accuracy(const MatrixRM& train, std::span<const int> train_labels, const MatrixRM& test,
                      std::span<const int> test_labels, const probe::SvmConfig& config) {
  const auto svm = probe::MulticlassSvm::fit(train, train_labels, config);
  return metrics::accuracy(svm.predict_all(test), test_labels);
}

TaskData task_from(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                   const probe::PoolingRule& rule, bool emotion) {
  if (!manifest.has_splits()) throw InvalidInput("layer trends: manifest has no split assignment");
  auto keep = [emotion](const corpus::UtteranceRecord& r) { return emotion ? r.emotion.has_value() : r.spoof.has_value(); };
  auto label = [emotion](const corpus::UtteranceRecord& r) {
    return emotion ? static_cast<int>(*r.emotion) : static_cast<int>(*r.spoof);
  };
  TaskData out;
  const auto train = probe::pool_split(cache, manifest, corpus::Split::train, rule, keep);
  const auto test = probe::pool_split(cache, manifest, corpus::Split::test, rule, keep);
  out.train = train.layers;
  out.test = test.layers;
  for (const auto& id : train.ids) out.train_labels.push_back(label(*manifest.find(id)));
  for (const auto& id : test.ids) out.test_labels.push_back(label(*manifest.find(id)));
  return out;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("spearman: inputs differ in length");
  if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double mean = (static_cast<double>(a.size()) + 1.0) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(va * vb);
}

LayerTrends dual_task_layer_trends(const TaskData& emotion, const TaskData& spoof, const probe::ProbeConfig& config) {
  if (emotion.train.size() != spoof.train.size()) {
    throw InvalidInput("layer trends: emotion and spoof features have different layer counts");
  }
  if (emotion.test_labels.empty() || spoof.test_labels.empty()) throw InvalidInput("layer trends: empty test split");
  LayerTrends trends;
  std::vector<double> emo, spf;
  for (std::size_t l = 0; l < emotion.train.size(); ++l) {
    LayerTrend t;
    t.layer = l;
    t.emotion_accuracy = layer_accuracy(emotion.train[l], emotion.train_labels, emotion.test[l], emotion.test_labels,
                                        config.svm);
    t.spoof_accuracy = layer_accuracy(spoof.train[l], spoof.train_labels, spoof.test[l], spoof.test_labels, config.svm);
    emo.push_back(t.emotion_accuracy);
    spf.push_back(t.spoof_accuracy);
    trends.layers.push_back(t);
  }
  trends.spearman = spearman(emo, spf);
  return trends;
}

TaskData emotion_task(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                      const probe::PoolingRule& rule) {
  return task_from(cache, manifest, rule, true);
}

TaskData spoof_task(const encoders::FeatureCache& cache, const corpus::CorpusManifest& manifest,
                    const probe::PoolingRule& rule) {
  return task_from(cache, manifest, rule, false);
}

std::string layer_trends_csv(const LayerTrends& trends) {
  std::string out = "layer,emotion_accuracy,spoof_accuracy\n";
  char buffer[96];
  for (const auto& t : trends.layers) {
    std::snprintf(buffer, sizeof buffer, "%zu,%.17g,%.17g\n", t.layer, t.emotion_accuracy, t.spoof_accuracy);
    out += buffer;
  }
  std::snprintf(buffer, sizeof buffer, "spearman,%.17g,\n", trends.spearman);
  return out + buffer;
}

}  // namespace emobridge::diagnostics

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "emobridge/diagnostics/attention.hpp"
#include "emobridge/encoders/toy_encoder.hpp"
#include "emobridge/diagnostics/embedding.hpp"
#include "emobridge/diagnostics/layer_trends.hpp"
#include "emobridge/diagnostics/silhouette.hpp"
#include "emobridge/error.hpp"
#include "test_support.hpp"

using namespace emobridge;
using namespace emobridge::diagnostics;

namespace {

encoders::ToyEncoderConfig small(bool uniform) {
  encoders::ToyEncoderConfig c;
  c.layers = 3;
  c.dim = 8;
  c.uniform_attention = uniform;
  return c;
}

std::vector<audio::Waveform> clips() {
  return {testing_support::sine(220, 0.5), testing_support::noise(0.45, 1), testing_support::sine(500, 0.6)};
}

}  // namespace

TEST(Attention, UniformEncoderGivesConstantProfile) {
  const auto bundle = encoders::build_toy_encoder(small(true));
  const auto profile = attention_profile(bundle, clips(), "model_ori");
  ASSERT_EQ(profile.per_layer.size(), 3u);
  EXPECT_EQ(profile.samples, 3u);
  EXPECT_EQ(profile.frames, encoders::toy::frame_count(static_cast<std::size_t>(0.45 * 16000), 16000));
  const double inv_t = 1.0 / static_cast<double>(profile.frames);
  for (const auto& layer : profile.per_layer) {
    ASSERT_EQ(layer.size(), profile.frames);
    for (double v : layer) {
      EXPECT_EQ(v, layer.front());
      EXPECT_NEAR(v, inv_t, 1e-15);
    }
  }
}

TEST(Attention, OverlapIdentityAndOrthogonality) {
  const auto bundle = encoders::build_toy_encoder(small(false));
  const auto p = attention_profile(bundle, clips(), "model_ori", 10);
  for (double o : attention_overlap(p, p)) EXPECT_EQ(o, 1.0);

  AttentionProfile a{"model_ori", 2, 1, {{1.0, 0.0}}};
  AttentionProfile b{"model_new", 2, 1, {{0.0, 1.0}}};
  EXPECT_EQ(attention_overlap(a, b).front(), 0.0);
  AttentionProfile c{"model_new", 3, 1, {{0.2, 0.3, 0.5}}};
  EXPECT_THROW(attention_overlap(a, c), InvalidInput);
  EXPECT_THROW(attention_profile(bundle, clips(), "x", 1000), InvalidInput);
}

TEST(Attention, CsvShape) {
  AttentionProfile a{"model_ori", 2, 1, {{0.5, 0.5}, {0.25, 0.75}}};
  const auto csv = attention_csv({a});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,position,value,condition");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Silhouette, KnownValue) {
  MatrixRM x(4, 1);
  x << 0, 1, 10, 11;
  const std::vector<std::string> g = {"a", "a", "b", "b"};
  // Point 0: a = 1, b = 10.5. Point 1: a = 1, b = 9.5. Symmetric for group b.
  const double expected = ((10.5 - 1) / 10.5 + (9.5 - 1) / 9.5) / 2.0;
  EXPECT_NEAR(mean_silhouette(x, g), expected, 1e-15);
}

TEST(Silhouette, SingletonsScoreZeroAndOneGroupThrows) {
  MatrixRM x(3, 1);
  x << 0, 1, 5;
  const std::vector<std::string> g = {"a", "a", "b"};
  const double s0 = (5.0 - 1.0) / 5.0, s1 = (4.0 - 1.0) / 4.0;
  EXPECT_NEAR(mean_silhouette(x, g), (s0 + s1 + 0.0) / 3.0, 1e-15);
  const std::vector<std::string> one = {"a", "a", "a"};
  EXPECT_THROW(mean_silhouette(x, one), InvalidInput);
}

TEST(Silhouette, PermutedLabelsCentreOnZero) {
  Rng rng(12);
  const int n = 60;
  MatrixRM x(n, 3);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    const int g = i % 3;
    for (int d = 0; d < 3; ++d) x(i, d) = (d == g ? 4.0 : 0.0) + rng.normal();
    labels.push_back("g" + std::to_string(g));
  }
  const double real = mean_silhouette(x, labels);
  std::vector<double> permuted;
  for (int p = 0; p < 200; ++p) {
    auto shuffled = labels;
    rng.shuffle(shuffled);
    permuted.push_back(mean_silhouette(x, shuffled));
  }
  const double mean = std::accumulate(permuted.begin(), permuted.end(), 0.0) / permuted.size();
  double var = 0.0;
  for (double v : permuted) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (permuted.size() - 1));
  // Random labels bias the silhouette slightly negative for small groups.
  EXPECT_LT(mean, 0.0 + 4.0 * sd);
  EXPECT_GT(mean, -0.08);
  EXPECT_GT(real, *std::max_element(permuted.begin(), permuted.end()));
}

TEST(Forgetting, IdenticalFeaturesScoreEqually) {
  Rng rng(2);
  MatrixRM x(12, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<std::string> g;
  for (int i = 0; i < 12; ++i) g.push_back(i < 6 ? "s1" : "s2");
  const auto score = forgetting_score(x, x, g, Grouping::speaker);
  EXPECT_EQ(score.cluster_quality_before, score.cluster_quality_after);
  EXPECT_THROW(forgetting_score(x, x.topRows(10), g, Grouping::speaker), InvalidInput);
}

TEST(Embedding, PcaSignConventionAndDegenerateInput) {
  MatrixRM line(4, 2);
  line << 0, 0, 1, 1, 2, 2, 3, 3;
  const MatrixRM p = PcaProjector{}.project(line, 0);
  ASSERT_EQ(p.cols(), 2);
  EXPECT_GT(p(3, 0), p(0, 0));  // positive loading on the shared direction
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(p(i, 1), 0.0, 1e-12);

  const MatrixRM same = MatrixRM::Constant(5, 3, 1.5);
  const MatrixRM z = PcaProjector{}.project(same, 0);
  EXPECT_TRUE(z.allFinite());
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);

  std::vector<PointMeta> meta(4);
  for (int i = 0; i < 4; ++i) meta[static_cast<std::size_t>(i)] = {"u" + std::to_string(i), "s", "happy", "t"};
  const auto ex = export_embedding(line, meta, "pretrained", 1);
  EXPECT_EQ(ex.projector, "pca");
  EXPECT_EQ(ex.points.size(), 4u);
  const auto csv = embedding_csv({ex});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,x,y,speaker,emotion,content,condition");
  EXPECT_THROW(export_embedding(line.topRows(2), {meta[0], meta[1]}, "x", 1), InvalidInput);
}

TEST(LayerTrends, SpearmanWithTies) {
  const std::vector<double> a = {1, 2, 3, 4};
  const std::vector<double> b = {10, 20, 30, 40};
  const std::vector<double> r = {4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(a, b), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, r), -1.0);
  // Average ranks: {1, 2.5, 2.5, 4} against {1, 2, 3, 4} gives 0.9486832980505138.
  const std::vector<double> tied = {1, 2, 2, 3};
  EXPECT_NEAR(spearman(tied, a), 0.9486832980505138, 1e-12);
  EXPECT_TRUE(std::isnan(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3})));
}

TEST(LayerTrends, DualTaskAccuracies) {
  Rng rng(4);
  auto make_task = [&](int informative_layer, int classes) {
    TaskData t;
    for (int split = 0; split < 2; ++split) {
      const int n = split == 0 ? 60 : 30;
      std::vector<MatrixRM> layers(2, MatrixRM(n, 2));
      std::vector<int> labels;
      for (int i = 0; i < n; ++i) {
        const int c = i % classes;
        labels.push_back(c);
        for (int l = 0; l < 2; ++l) {
          layers[static_cast<std::size_t>(l)](i, 0) = rng.normal() + (l == informative_layer ? 5.0 * c : 0.0);
          layers[static_cast<std::size_t>(l)](i, 1) = rng.normal();
        }
      }
      (split == 0 ? t.train : t.test) = layers;
      (split == 0 ? t.train_labels : t.test_labels) = labels;
    }
    return t;
  };
  const auto trends = dual_task_layer_trends(make_task(0, 3), make_task(0, 2));
  ASSERT_EQ(trends.layers.size(), 2u);
  EXPECT_GT(trends.layers[0].emotion_accuracy, trends.layers[1].emotion_accuracy);
  EXPECT_GT(trends.layers[0].spoof_accuracy, trends.layers[1].spoof_accuracy);
  EXPECT_DOUBLE_EQ(trends.spearman, 1.0);
  EXPECT_NE(layer_trends_csv(trends).find("spearman,"), std::string::npos);
}

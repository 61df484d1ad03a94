#include <gtest/gtest.h>

#include <cmath>

#include "emobridge/encoders/feature_cache.hpp"
#include "emobridge/error.hpp"
#include "emobridge/probe/pooling.hpp"
#include "emobridge/probe/report.hpp"
#include "emobridge/probe/spoof_probe.hpp"
#include "test_support.hpp"

using namespace emobridge;
using corpus::SpoofLabel;

namespace {

// Two-layer cache where layer 0 carries the spoof cue and layer 1 is noise.
struct ProbeFixture {
  testing_support::TempDir dir{"probe"};
  corpus::CorpusManifest manifest;
  encoders::FeatureCache cache = build();

  encoders::FeatureCache build() {
    Rng rng(17);
    std::vector<encoders::LayerFeatureSet> sets;
    const char* attacks[] = {"A07", "A08"};
    for (int i = 0; i < 80; ++i) {
      const bool spoof = i % 2 == 1;
      corpus::UtteranceRecord r;
      r.id = "u" + std::to_string(i);
      r.audio_path = r.id + ".wav";
      r.spoof = spoof ? SpoofLabel::spoof : SpoofLabel::bonafide;
      if (spoof) r.attack_id = attacks[(i / 2) % 2];
      manifest.records.push_back(r);
      manifest.split_of[r.id] = i < 60 ? corpus::Split::train : corpus::Split::test;
      encoders::LayerFeatureSet s;
      s.utterance_id = r.id;
      for (int l = 0; l < 2; ++l) {
        MatrixF m(4, 3);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<float>(rng.normal());
        if (l == 0) m.col(0).array() += spoof ? 3.0f : -3.0f;
        s.layers.push_back(m);
      }
      sets.push_back(s);
    }
    return encoders::write_cache(sets, dir.file("c.embr"));
  }
};

probe::ProbeReport sample_report(probe::Condition condition, double shift) {
  probe::ProbeReport r;
  r.dataset = "SYNTH";
  r.model = "TOY";
  r.condition = condition;
  for (std::size_t l = 0; l < 3; ++l) r.per_layer.push_back({l, 0.1 * l + shift, 0.9 - 0.05 * l});
  r.finalize_averages();
  r.per_source = {{"A07", {0.75, 3, 4}}, {"Real", {0.5, 1, 2}}};
  return r;
}

}  // namespace

TEST(Pooling, TimeMean) {
  MatrixF m(3, 2);
  m << 1, 2, 3, 4, 5, 9;
  const VectorD v = probe::pool_layer(m);
  EXPECT_DOUBLE_EQ(v(0), 3.0);
  EXPECT_DOUBLE_EQ(v(1), 5.0);
  EXPECT_THROW(probe::pool_layer(MatrixF(0, 2)), InvalidInput);
  encoders::LayerFeatureSet s;
  s.layers = {m, m * 2.0f};
  const auto pooled = probe::pool(s);
  ASSERT_EQ(pooled.size(), 2u);
  EXPECT_DOUBLE_EQ(pooled[1](1), 10.0);
  s.layers[1](0, 0) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(probe::pool(s), NumericalError);
}

TEST(PerSource, BreakdownByAttack) {
  using L = SpoofLabel;
  const std::vector<L> labels = {L::spoof, L::spoof, L::spoof, L::spoof, L::bonafide, L::bonafide, L::spoof};
  const std::vector<L> preds = {L::spoof, L::spoof, L::spoof, L::bonafide, L::bonafide, L::spoof, L::spoof};
  const std::vector<std::optional<std::string>> attacks = {"A07", "A07", "A07", "A07", std::nullopt, std::nullopt,
                                                           std::nullopt};
  const auto out = probe::per_source_breakdown(preds, labels, attacks);
  EXPECT_DOUBLE_EQ(out.at("A07").accuracy, 0.75);
  EXPECT_DOUBLE_EQ(out.at("Real").accuracy, 0.5);
  EXPECT_EQ(out.at("unknown").support, 1u);
  std::size_t support = 0, correct = 0;
  for (const auto& [name, s] : out) support += s.support, correct += s.correct;
  EXPECT_EQ(support, labels.size());
  EXPECT_EQ(correct, 5u);
}

TEST(SpoofProbe, FindsTheInformativeLayer) {
  ProbeFixture f;
  const auto report = probe::probe_all_layers(f.cache, f.manifest, probe::Condition::pretrained, {}, 2);
  ASSERT_EQ(report.per_layer.size(), 2u);
  EXPECT_LT(report.per_layer[0].eer, 0.1);
  EXPECT_GT(report.per_layer[0].accuracy, 0.9);
  EXPECT_EQ(report.source_layer, 0u);
  EXPECT_EQ(report.train_size, 60u);
  EXPECT_EQ(report.test_size, 20u);
  EXPECT_DOUBLE_EQ(report.layer_avg_eer, (report.per_layer[0].eer + report.per_layer[1].eer) / 2.0);

  double weighted = 0.0;
  for (const auto& [name, s] : report.per_source) weighted += s.accuracy * s.support;
  EXPECT_NEAR(weighted / report.test_size, report.per_layer[report.source_layer].accuracy, 1e-12);
  EXPECT_THROW(probe::probe_all_layers(f.cache, f.manifest, probe::Condition::pretrained, {}, 3), InvalidInput);
}

TEST(SpoofProbe, MissingIdsReportedTogether) {
  ProbeFixture f;
  auto m = f.manifest;
  for (const char* id : {"ghost1", "ghost2"}) {
    corpus::UtteranceRecord r;
    r.id = id;
    r.spoof = SpoofLabel::spoof;
    m.records.push_back(r);
    m.split_of[id] = corpus::Split::train;
  }
  try {
    probe::pool_split(f.cache, m, corpus::Split::train);
    FAIL();
  } catch (const NotFound& e) {
    EXPECT_NE(std::string(e.what()).find("ghost1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("ghost2"), std::string::npos);
  }
}

TEST(Report, AveragesAreExactMeans) {
  const auto r = sample_report(probe::Condition::pretrained, 0.0);
  EXPECT_EQ(r.layer_avg_eer, (0.0 + 0.1 + 0.2) / 3.0);
  EXPECT_EQ(r.layer_avg_acc, (0.9 + 0.85 + 0.8) / 3.0);
}

TEST(Report, JsonRoundTrip) {
  auto r = sample_report(probe::Condition::emotion_fused, 0.01);
  r.checksums["theta"] = "abc";
  r.notes = {"n1"};
  const auto back = probe::report_from_json(probe::to_json(r));
  EXPECT_EQ(back.condition, probe::Condition::emotion_fused);
  ASSERT_EQ(back.per_layer.size(), 3u);
  EXPECT_EQ(back.per_layer[2].eer, r.per_layer[2].eer);
  EXPECT_EQ(back.layer_avg_acc, r.layer_avg_acc);
  EXPECT_EQ(back.per_source.at("A07").correct, 3u);
  EXPECT_EQ(back.checksums.at("theta"), "abc");
  EXPECT_THROW(probe::report_from_json("{"), FormatError);
}

TEST(Report, ComparisonCsvRoundTrip) {
  const auto rows = probe::compare({sample_report(probe::Condition::pretrained, 0.0),
                                    sample_report(probe::Condition::emotion_fused, 0.03)});
  ASSERT_EQ(rows.size(), 1u);
  const auto csv = probe::comparison_csv(rows);
  EXPECT_EQ(csv.substr(0, probe::kComparisonHeader.size()), probe::kComparisonHeader);
  const auto back = probe::parse_comparison_csv(csv);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].fused_eer, rows[0].fused_eer);
  EXPECT_EQ(back[0].pretrained_acc, rows[0].pretrained_acc);
}

TEST(Report, SourceTableRoundTrip) {
  auto a = sample_report(probe::Condition::pretrained, 0.0);
  auto b = sample_report(probe::Condition::emotion_fused, 0.0);
  b.per_source.erase("A07");
  b.per_source["A08"] = {1.0, 2, 2};
  const auto table = probe::source_table({a, b});
  EXPECT_EQ(table.sources.back(), "Real");
  EXPECT_EQ(table.columns, (std::vector<std::string>{"TOY/pretrained", "TOY/emotion_fused"}));
  const auto back = probe::parse_source_table_csv(probe::source_table_csv(table));
  ASSERT_EQ(back.sources, table.sources);
  for (std::size_t s = 0; s < table.sources.size(); ++s) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (std::isnan(table.accuracy[s][c])) {
        EXPECT_TRUE(std::isnan(back.accuracy[s][c]));
      } else {
        EXPECT_EQ(back.accuracy[s][c], table.accuracy[s][c]);
      }
    }
  }
}

TEST(Report, ConditionNames) {
  EXPECT_EQ(probe::parse_condition("emotion_fused"), probe::Condition::emotion_fused);
  EXPECT_THROW(probe::parse_condition("fused"), InvalidInput);
}

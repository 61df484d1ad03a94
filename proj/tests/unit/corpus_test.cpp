#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "emobridge/corpus/labels.hpp"
#include "emobridge/corpus/manifest.hpp"
#include "emobridge/corpus/splits.hpp"
#include "emobridge/corpus/synth.hpp"
#include "emobridge/error.hpp"
#include "test_support.hpp"

using namespace emobridge;
using namespace emobridge::corpus;

namespace {

CorpusManifest numbered(std::size_t n) {
  CorpusManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    UtteranceRecord r;
    r.id = "utt" + std::to_string(i);
    r.audio_path = r.id + ".wav";
    r.emotion = Emotion::neutral;
    m.records.push_back(r);
  }
  return m;
}

}  // namespace

TEST(Splits, GoldenSizes) {
  const SplitSpec spec;
  const auto nine = split_sizes(9, spec);
  EXPECT_EQ(nine.train, 9u);
  EXPECT_EQ(nine.dev, 0u);
  EXPECT_EQ(nine.test, 0u);
  const auto ten = split_sizes(10, spec);
  EXPECT_EQ(ten.train, 8u);
  EXPECT_EQ(ten.dev, 1u);
  EXPECT_EQ(ten.test, 1u);
  const auto big = split_sizes(200, spec);
  EXPECT_EQ(big.train + big.dev + big.test, 200u);
  EXPECT_EQ(big.test, 20u);
}

TEST(Splits, DegenerateSplitWarns) {
  const auto m = make_splits(numbered(9), SplitSpec{});
  EXPECT_EQ(m.count(Split::train), 9u);
  EXPECT_FALSE(m.provenance.warnings.empty());
}

TEST(Splits, IndependentOfRecordOrder) {
  auto a = numbered(50);
  auto b = a;
  std::reverse(b.records.begin(), b.records.end());
  const auto sa = make_splits(a, SplitSpec{});
  const auto sb = make_splits(b, SplitSpec{});
  EXPECT_EQ(sa.split_of, sb.split_of);
  SplitSpec other;
  other.seed = 43;
  EXPECT_NE(sa.split_of, make_splits(a, other).split_of);
}

TEST(Labels, EveryDocumentedLabelIsTotal) {
  for (auto dataset : {DatasetId::TESS, DatasetId::SAVEE, DatasetId::CREMAD, DatasetId::RAVDESS, DatasetId::ESD,
                       DatasetId::EMOFAKE, DatasetId::SYNTH}) {
    ASSERT_TRUE(has_emotion_labels(dataset));
    for (auto raw : documented_labels(dataset)) {
      EXPECT_NO_THROW(unify_emotion_label(raw, dataset)) << to_string(dataset) << " " << raw;
    }
  }
  EXPECT_THROW(unify_emotion_label("happy", DatasetId::ASV19LA), InvalidInput);
  EXPECT_THROW(unify_emotion_label("bored", DatasetId::CREMAD), InvalidInput);
}

TEST(Labels, CalmIsDroppedUnlessMerged) {
  EXPECT_FALSE(unify_emotion_label("calm", DatasetId::RAVDESS).has_value());
  LabelOptions merge;
  merge.merge_calm_into_neutral = true;
  EXPECT_EQ(unify_emotion_label("calm", DatasetId::RAVDESS, merge), Emotion::neutral);
}

TEST(Labels, RoundTripNames) {
  for (auto e : kAllEmotions) EXPECT_EQ(parse_emotion(to_string(e)), e);
  EXPECT_EQ(parse_dataset_id("asv19la"), DatasetId::ASV19LA);
  EXPECT_THROW(parse_dataset_id("LIBRI"), InvalidInput);
}

TEST(Manifest, WriteThenLoadUnified) {
  testing_support::TempDir dir("manifest");
  auto m = make_splits(numbered(10), SplitSpec{});
  m.records[3].spoof = SpoofLabel::spoof;
  m.records[3].attack_id = "A07";
  m.records[4].speaker_id = "spk,1";
  write_manifest(dir.file("m.csv"), m);
  LoadOptions options;
  options.probe_audio = false;
  const auto back = load_unified_manifest(dir.file("m.csv"), options);
  ASSERT_EQ(back.records.size(), 10u);
  EXPECT_EQ(back.split_of, m.split_of);
  EXPECT_EQ(back.records[3].attack_id, "A07");
  EXPECT_EQ(back.records[4].speaker_id, "spk,1");
}

TEST(Manifest, RowErrorsCarryRowNumbers) {
  testing_support::TempDir dir("manifest_bad");
  LoadOptions options;
  options.probe_audio = false;
  std::ofstream(dir.file("short.csv")) << kManifestHeader << "\na,a.wav,CREMAD,,ANG,,,\n";
  try {
    load_manifest(dir.file("short.csv"), DatasetId::CREMAD, options);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  std::ofstream(dir.file("dup.csv")) << kManifestHeader << "\na,a.wav,CREMAD,,ANG,,,,\na,b.wav,CREMAD,,SAD,,,,\n";
  EXPECT_THROW(load_manifest(dir.file("dup.csv"), DatasetId::CREMAD, options), InvalidInput);
  std::ofstream(dir.file("hdr.csv")) << "id,path\n";
  EXPECT_THROW(load_manifest(dir.file("hdr.csv"), DatasetId::CREMAD, options), FormatError);
  EXPECT_THROW(load_manifest(dir.file("nope.csv"), DatasetId::CREMAD, options), NotFound);
  std::ofstream(dir.file("calm.csv")) << kManifestHeader << "\na,a.wav,RAVDESS,,calm,,,,\nb,b.wav,RAVDESS,,happy,,,,\n";
  const auto ravdess = load_manifest(dir.file("calm.csv"), DatasetId::RAVDESS, options);
  EXPECT_EQ(ravdess.records.size(), 1u);
  EXPECT_EQ(ravdess.provenance.skipped, 1u);
}

TEST(Synth, DeterministicAndLabelled) {
  testing_support::TempDir a("synth_a"), b("synth_b");
  SynthConfig config;
  config.emotion_counts.fill(2);
  config.bonafide = 3;
  config.spoof = 3;
  config.attack_ids = {"S1", "S2"};
  const auto ma = synth_corpus(config, 42, a.path().string());
  const auto mb = synth_corpus(config, 42, b.path().string());
  ASSERT_EQ(ma.records.size(), 14u + 6u);
  for (std::size_t i = 0; i < ma.records.size(); ++i) {
    EXPECT_EQ(audio::read_wav(ma.records[i].audio_path).samples, audio::read_wav(mb.records[i].audio_path).samples);
  }
  std::set<std::string> attacks;
  for (const auto& r : ma.records) {
    if (r.spoof == SpoofLabel::spoof) attacks.insert(*r.attack_id);
  }
  EXPECT_EQ(attacks, (std::set<std::string>{"S1", "S2"}));
  config.bonafide = config.spoof = 0;
  config.emotion_counts.fill(0);
  EXPECT_THROW(synth_corpus(config, 1, a.file("empty")), InvalidInput);
}

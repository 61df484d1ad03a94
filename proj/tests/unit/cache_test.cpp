#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "emobridge/binary_io.hpp"
#include "emobridge/encoders/feature_cache.hpp"
#include "emobridge/encoders/functionals.hpp"
#include "emobridge/error.hpp"
#include "test_support.hpp"

using namespace emobridge;
using encoders::LayerFeatureSet;

namespace {

LayerFeatureSet random_set(Rng& rng, const std::string& id, std::size_t layers, std::size_t dim) {
  LayerFeatureSet s;
  s.utterance_id = id;
  const auto t = static_cast<Eigen::Index>(1 + rng.below(12));
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixF m(t, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal() * 100.0);
    s.layers.push_back(m);
  }
  return s;
}

void patch(const std::string& path, std::size_t offset, const void* bytes, std::size_t n) {
  std::string data = binary::read_file(path);
  std::memcpy(data.data() + offset, bytes, n);
  binary::write_file_atomically(path, data);
}

}  // namespace

TEST(FeatureCache, ThousandRecordsRoundTripBitExactly) {
  testing_support::TempDir dir("cache");
  Rng rng(8);
  std::vector<LayerFeatureSet> sets;
  for (int i = 0; i < 1000; ++i) sets.push_back(random_set(rng, "utt_" + std::to_string(i), 3, 5));
  const auto cache = encoders::write_cache(sets, dir.file("f.embr"));
  EXPECT_EQ(cache.index().size(), 1000u);
  const auto reopened = encoders::FeatureCache::open(dir.file("f.embr"));
  for (const auto& s : sets) {
    const auto back = reopened.read(s.utterance_id);
    ASSERT_EQ(back.layers.size(), s.layers.size());
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
      ASSERT_EQ(back.layers[l].rows(), s.layers[l].rows());
      EXPECT_EQ(std::memcmp(back.layers[l].data(), s.layers[l].data(), sizeof(float) * s.layers[l].size()), 0);
    }
  }
  EXPECT_THROW(reopened.read("absent"), NotFound);
}

TEST(FeatureCache, MissingIndexIsRebuilt) {
  testing_support::TempDir dir("cache_idx");
  Rng rng(1);
  encoders::write_cache({random_set(rng, "a", 2, 4), random_set(rng, "b", 2, 4)}, dir.file("f.embr"));
  std::filesystem::remove(encoders::cache_index_path(dir.file("f.embr")));
  const auto cache = encoders::FeatureCache::open(dir.file("f.embr"));
  EXPECT_TRUE(cache.contains("a"));
  EXPECT_TRUE(cache.contains("b"));
}

TEST(FeatureCache, CorruptMagicAndVersionRejected) {
  testing_support::TempDir dir("cache_bad");
  Rng rng(2);
  encoders::write_cache({random_set(rng, "a", 2, 4)}, dir.file("f.embr"));
  const std::string pristine = binary::read_file(dir.file("f.embr"));

  patch(dir.file("f.embr"), 0, "EMBX", 4);
  EXPECT_THROW(encoders::FeatureCache::open(dir.file("f.embr")), FormatError);

  binary::write_file_atomically(dir.file("f.embr"), pristine);
  const unsigned char version[4] = {99, 0, 0, 0};
  patch(dir.file("f.embr"), 4, version, 4);
  EXPECT_THROW(encoders::FeatureCache::open(dir.file("f.embr")), FormatError);

  binary::write_file_atomically(dir.file("f.embr"), pristine.substr(0, pristine.size() - 7));
  EXPECT_ANY_THROW(encoders::FeatureCache::open(dir.file("f.embr")).read("a"));
}

TEST(FeatureCache, WriterRejectsShapeMismatchDuplicatesAndNonFinite) {
  testing_support::TempDir dir("cache_w");
  Rng rng(3);
  encoders::FeatureCacheWriter writer(dir.file("f.embr"), 2, 4);
  writer.append(random_set(rng, "a", 2, 4));
  EXPECT_THROW(writer.append(random_set(rng, "a", 2, 4)), InvalidInput);
  EXPECT_THROW(writer.append(random_set(rng, "b", 3, 4)), InvalidInput);
  EXPECT_THROW(writer.append(random_set(rng, "c", 2, 5)), InvalidInput);
  auto bad = random_set(rng, "d", 2, 4);
  bad.layers[1](0, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(writer.append(bad), NumericalError);
  writer.close();
  EXPECT_EQ(encoders::FeatureCache::open(dir.file("f.embr")).ids(), std::vector<std::string>{"a"});
}

TEST(FeatureCache, UnclosedWriterLeavesNothingBehind) {
  testing_support::TempDir dir("cache_abort");
  Rng rng(4);
  {
    encoders::FeatureCacheWriter writer(dir.file("f.embr"), 2, 4);
    writer.append(random_set(rng, "a", 2, 4));
  }
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(FeatureCache, FunctionalsTravelAsSingleLayer) {
  const auto f = encoders::extract_functionals(testing_support::sine(250, 0.5), encoders::FunctionalSet::EGEMAPS_LIKE);
  const auto layer = encoders::as_single_layer("x", f);
  ASSERT_EQ(layer.layer_count(), 1u);
  EXPECT_EQ(layer.layers[0].rows(), 1);
  EXPECT_EQ(layer.feature_dim(), 20u);
}

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "emobridge/encoders/bundle.hpp"

namespace emobridge::encoders {

// Cache file layout (little endian):
//   "EMBR" | version u32 | L u32 | D u32 |
//   records: [id_len u16][id UTF-8][L x (T u32, T*D float32 row-major)]
// A JSON sidecar <path>.index.json maps id -> byte offset of the record.
inline constexpr char kCacheMagic[4] = {'E', 'M', 'B', 'R'};
inline constexpr std::uint32_t kCacheVersion = 1;

std::string cache_index_path(const std::string& cache_path);

/// Single-writer streaming cache builder. close() publishes the file and its index;
/// a writer destroyed before close() discards what it wrote.
class FeatureCacheWriter {
 public:
  FeatureCacheWriter(const std::string& path, std::size_t layers, std::size_t dim);
  ~FeatureCacheWriter();
  FeatureCacheWriter(const FeatureCacheWriter&) = delete;
  FeatureCacheWriter& operator=(const FeatureCacheWriter&) = delete;

  /// Throws InvalidInput on shape mismatch or a repeated id, NumericalError on non-finite data.
  void append(const LayerFeatureSet& features);
  void close();
  std::size_t size() const noexcept { return index_.size(); }

 private:
  std::string path_;
  std::string temp_path_;
  std::size_t layers_;
  std::size_t dim_;
  std::ofstream out_;
  std::map<std::string, std::uint64_t> index_;
  bool closed_ = false;
};

/// Read-only random access to a cache file. Safe for concurrent readers when each
/// thread uses its own FeatureCache instance.
class FeatureCache {
 public:
  /// Validates the header and index. Rebuilds the index by scanning when the
  /// sidecar is missing. Throws FormatError on bad magic/version or bad offsets.
  static FeatureCache open(const std::string& path);

  const std::string& path() const noexcept { return path_; }
  std::size_t layer_count() const noexcept { return layers_; }
  std::size_t feature_dim() const noexcept { return dim_; }
  std::uint64_t file_size() const noexcept { return file_size_; }
  const std::map<std::string, std::uint64_t>& index() const noexcept { return index_; }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::vector<std::string> ids() const;

  /// Throws NotFound for unknown ids.
  LayerFeatureSet read(const std::string& id) const;

 private:
  std::string path_;
  std::size_t layers_ = 0;
  std::size_t dim_ = 0;
  std::uint64_t file_size_ = 0;
  std::map<std::string, std::uint64_t> index_;
};

/// Writes every set to a new cache. All sets must share (L, D).
FeatureCache write_cache(const std::vector<LayerFeatureSet>& sets, const std::string& path);
LayerFeatureSet read_cache(const std::string& path, const std::string& id);

/// Replays features produced by an external encoder (e.g. a pretrained
/// checkpoint run outside this library) from a cache, keyed by utterance id.
class CachedFeatureAdapter final : public LayerExtractor {
 public:
  CachedFeatureAdapter(const std::string& cache_path, int sample_rate);
  std::size_t layer_count() const override { return cache_.layer_count(); }
  std::size_t feature_dim() const override { return cache_.feature_dim(); }
  int sample_rate() const override { return sample_rate_; }
  LayerFeatureSet extract(const std::string& utterance_id, const audio::Waveform& waveform) const override;

 private:
  FeatureCache cache_;
  int sample_rate_;
};

}  // namespace emobridge::encoders

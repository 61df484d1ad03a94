#include "emobridge/encoders/feature_cache.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>

#include "emobridge/binary_io.hpp"
#include "emobridge/error.hpp"

namespace emobridge::encoders {

namespace fs = std::filesystem;
using binary::read_le;
using binary::write_le;

std::string cache_index_path(const std::string& cache_path) { return cache_path + ".index.json"; }

FeatureCacheWriter::FeatureCacheWriter(const std::string& path, std::size_t layers, std::size_t dim)
    : path_(path), temp_path_(path + ".partial"), layers_(layers), dim_(dim) {
  if (layers == 0 || dim == 0) throw InvalidInput("feature cache needs L > 0 and D > 0");
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  out_.open(temp_path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw InvalidInput("cannot write feature cache " + temp_path_);
  out_.write(kCacheMagic, 4);
  write_le<std::uint32_t>(out_, kCacheVersion);
  write_le<std::uint32_t>(out_, static_cast<std::uint32_t>(layers));
  write_le<std::uint32_t>(out_, static_cast<std::uint32_t>(dim));
}

// Not closed means the caller bailed out mid-write: drop the partial file.
FeatureCacheWriter::~FeatureCacheWriter() {
  if (closed_) return;
  out_.close();
  std::error_code ec;
  fs::remove(temp_path_, ec);
}

void FeatureCacheWriter::append(const LayerFeatureSet& features) {
  if (closed_) throw InvalidInput("feature cache already closed");
  if (features.layer_count() != layers_ || features.feature_dim() != dim_) {
    throw InvalidInput("feature set '" + features.utterance_id + "' has shape (" +
                       std::to_string(features.layer_count()) + ", " + std::to_string(features.feature_dim()) +
                       "), cache expects (" + std::to_string(layers_) + ", " + std::to_string(dim_) + ")");
  }
  features.validate();
  if (index_.count(features.utterance_id) != 0) {
    throw InvalidInput("feature cache: repeated id '" + features.utterance_id + "'");
  }
  const auto offset = static_cast<std::uint64_t>(out_.tellp());
  binary::write_string_u16(out_, features.utterance_id);
  for (const MatrixF& layer : features.layers) {
    write_le<std::uint32_t>(out_, static_cast<std::uint32_t>(layer.rows()));
    const float* data = layer.data();
    for (Eigen::Index i = 0; i < layer.size(); ++i) write_le<float>(out_, data[i]);
  }
  if (!out_) throw Error("write failed for " + temp_path_);
  index_.emplace(features.utterance_id, offset);
}

void FeatureCacheWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.close();
  fs::rename(temp_path_, path_);
  nlohmann::json index = nlohmann::json::object();
  for (const auto& [id, offset] : index_) index[id] = offset;
  binary::write_file_atomically(cache_index_path(path_), index.dump() + "\n");
}

namespace {

struct Header {
  std::size_t layers;
  std::size_t dim;
};

Header read_header(std::istream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kCacheMagic)) {
    throw FormatError(path + ": bad feature cache magic");
  }
  const auto version = read_le<std::uint32_t>(in, "cache version");
  if (version != kCacheVersion) {
    throw FormatError(path + ": unsupported feature cache version " + std::to_string(version));
  }
  const auto layers = read_le<std::uint32_t>(in, "layer count");
  const auto dim = read_le<std::uint32_t>(in, "feature dim");
  if (layers == 0 || dim == 0) throw FormatError(path + ": zero layer count or dimension");
  return {layers, dim};
}

LayerFeatureSet read_record(std::istream& in, std::size_t layers, std::size_t dim) {
  LayerFeatureSet out;
  out.utterance_id = binary::read_string_u16(in, "utterance id");
  out.layers.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto frames = read_le<std::uint32_t>(in, "frame count");
    MatrixF layer(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
    float* data = layer.data();
    for (Eigen::Index i = 0; i < layer.size(); ++i) data[i] = read_le<float>(in, "feature value");
    out.layers.push_back(std::move(layer));
  }
  return out;
}

}  // namespace

FeatureCache FeatureCache::open(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("feature cache not found: " + path);
  FeatureCache cache;
  cache.path_ = path;
  const Header header = read_header(in, path);
  cache.layers_ = header.layers;
  cache.dim_ = header.dim;
  cache.file_size_ = fs::file_size(path);
  const std::uint64_t data_start = 16;

  const std::string index_path = cache_index_path(path);
  if (fs::exists(index_path)) {
    nlohmann::json index;
    try {
      index = nlohmann::json::parse(binary::read_file(index_path));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(index_path + ": " + e.what());
    }
    for (const auto& [id, offset] : index.items()) {
      const auto value = offset.get<std::uint64_t>();
      if (value < data_start || value >= cache.file_size_) {
        throw FormatError(index_path + ": offset for '" + id + "' lies outside the cache file");
      }
      cache.index_.emplace(id, value);
    }
  } else {
    while (in.peek() != std::char_traits<char>::eof()) {
      const auto offset = static_cast<std::uint64_t>(in.tellg());
      LayerFeatureSet record = read_record(in, cache.layers_, cache.dim_);
      cache.index_.emplace(record.utterance_id, offset);
    }
  }
  return cache;
}

std::vector<std::string> FeatureCache::ids() const {
  std::vector<std::pair<std::uint64_t, std::string>> ordered;
  for (const auto& [id, offset] : index_) ordered.emplace_back(offset, id);
  std::sort(ordered.begin(), ordered.end());
  std::vector<std::string> out;
  for (auto& entry : ordered) out.push_back(std::move(entry.second));
  return out;
}

LayerFeatureSet FeatureCache::read(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFound("feature cache " + path_ + " has no utterance '" + id + "'");
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw NotFound("feature cache not found: " + path_);
  in.seekg(static_cast<std::streamoff>(it->second));
  LayerFeatureSet record = read_record(in, layers_, dim_);
  if (record.utterance_id != id) {
    throw FormatError(path_ + ": index points at '" + record.utterance_id + "' instead of '" + id + "'");
  }
  return record;
}

FeatureCache write_cache(const std::vector<LayerFeatureSet>& sets, const std::string& path) {
  if (sets.empty()) throw InvalidInput("write_cache: no feature sets");
  {
    FeatureCacheWriter writer(path, sets.front().layer_count(), sets.front().feature_dim());
    for (const auto& set : sets) writer.append(set);
    writer.close();
  }
  return FeatureCache::open(path);
}

LayerFeatureSet read_cache(const std::string& path, const std::string& id) {
  return FeatureCache::open(path).read(id);
}

CachedFeatureAdapter::CachedFeatureAdapter(const std::string& cache_path, int sample_rate)
    : cache_(FeatureCache::open(cache_path)), sample_rate_(sample_rate) {}

LayerFeatureSet CachedFeatureAdapter::extract(const std::string& utterance_id,
                                              const audio::Waveform& waveform) const {
  if (waveform.samples.empty()) throw InvalidInput("extract: empty waveform");
  if (waveform.sample_rate != sample_rate_) throw InvalidInput("extract: sample rate mismatch");
  LayerFeatureSet out = cache_.read(utterance_id);
  out.validate();
  return out;
}

}  // namespace emobridge::encoders

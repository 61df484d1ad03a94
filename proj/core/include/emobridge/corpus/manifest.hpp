#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emobridge/corpus/labels.hpp"

namespace emobridge::corpus {

enum class Split { train, dev, test };
std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  DatasetId dataset = DatasetId::SYNTH;
  int sample_rate = 0;    // 0 when the audio header was not probed
  double duration = 0.0;  // seconds; 0 when not probed
  std::optional<Emotion> emotion;
  std::optional<SpoofLabel> spoof;
  std::optional<std::string> attack_id;
  std::optional<std::string> speaker_id;
  std::optional<std::string> content_id;
};

struct SourceChecksum {
  std::string path;
  std::string sha256;
  DatasetId dataset = DatasetId::SYNTH;
};

struct Provenance {
  std::vector<SourceChecksum> sources;
  std::size_t skipped = 0;
  std::vector<std::string> skipped_rows;  // "row N: reason"
  std::vector<std::string> notes;
  std::vector<std::string> warnings;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  std::map<std::string, Split> split_of;
  Provenance provenance;

  bool has_splits() const { return !records.empty() && split_of.size() == records.size(); }
  const UtteranceRecord* find(const std::string& id) const;
  std::vector<const UtteranceRecord*> in_split(Split split) const;
  std::size_t count(Split split) const;
};

struct LoadOptions {
  LabelOptions labels;
  // Read each WAV header for sample rate and duration. Audio files must exist.
  bool probe_audio = true;
};

inline constexpr std::string_view kManifestHeader =
    "id,audio_path,dataset,split,emotion,spoof,attack_id,speaker_id,content_id";

/// Parses a manifest CSV. Relative audio paths resolve against the manifest's directory.
/// Rows whose emotion label maps to Dropped are skipped and counted in provenance.
/// Throws NotFound (missing file), FormatError (malformed row, with row number) and
/// InvalidInput (duplicate id, unknown label).
CorpusManifest load_manifest(const std::string& path, DatasetId dataset,
                             const LoadOptions& options = {});

/// Reads a manifest produced by write_manifest: every row names its dataset and
/// emotion labels use the canonical 7-class names.
CorpusManifest load_unified_manifest(const std::string& path, const LoadOptions& options = {});

/// Writes the manifest CSV, including the split column when splits are assigned.
void write_manifest(const std::string& path, const CorpusManifest& manifest);

/// Concatenates manifests; ids must stay unique.
CorpusManifest merge_manifests(const std::vector<CorpusManifest>& parts);

/// Keeps records matching the predicate together with their split assignment.
template <typename Predicate>
CorpusManifest filter_manifest(const CorpusManifest& manifest, Predicate keep) {
  CorpusManifest out;
  out.provenance = manifest.provenance;
  for (const auto& record : manifest.records) {
    if (!keep(record)) continue;
    out.records.push_back(record);
    if (auto it = manifest.split_of.find(record.id); it != manifest.split_of.end()) {
      out.split_of.emplace(record.id, it->second);
    }
  }
  return out;
}

/// Splits one CSV line honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

}  // namespace emobridge::corpus

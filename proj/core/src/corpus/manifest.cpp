#include "emobridge/corpus/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "emobridge/audio/wav.hpp"
#include "emobridge/binary_io.hpp"
#include "emobridge/checksum.hpp"
#include "emobridge/error.hpp"

namespace emobridge::corpus {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  throw InvalidInput("unknown split");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev" || name == "valid" || name == "validation") return Split::dev;
  if (name == "test" || name == "eval") return Split::test;
  throw InvalidInput("unknown split '" + std::string(name) + "'");
}

const UtteranceRecord* CorpusManifest::find(const std::string& id) const {
  for (const auto& record : records) {
    if (record.id == id) return &record;
  }
  return nullptr;
}

std::vector<const UtteranceRecord*> CorpusManifest::in_split(Split split) const {
  std::vector<const UtteranceRecord*> out;
  for (const auto& record : records) {
    auto it = split_of.find(record.id);
    if (it != split_of.end() && it->second == split) out.push_back(&record);
  }
  return out;
}

std::size_t CorpusManifest::count(Split split) const {
  std::size_t n = 0;
  for (const auto& [id, s] : split_of) n += (s == split) ? 1 : 0;
  return n;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw FormatError("unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::optional<std::string> optional_field(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return value;
}

}  // namespace

namespace {

// dataset == nullopt: a unified manifest written by write_manifest. Each row
// names its dataset and emotion labels are already canonical.
CorpusManifest load_any(const std::string& path, std::optional<DatasetId> expected, const LoadOptions& options) {
  const DatasetId dataset = expected.value_or(DatasetId::SYNTH);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("manifest not found: " + path);

  CorpusManifest manifest;
  manifest.provenance.sources.push_back({path, sha256_file(path), dataset});
  const fs::path base = fs::path(path).parent_path();

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kManifestHeader) {
    throw FormatError(path + ": header must be '" + std::string(kManifestHeader) + "'");
  }

  std::set<std::string> seen;
  std::size_t row = 1;
  std::size_t with_split = 0;
  std::map<std::string, Split> splits;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& reason) -> FormatError {
      return FormatError(path + ": row " + std::to_string(row) + ": " + reason);
    };

    std::vector<std::string> f;
    try {
      f = split_csv_line(line);
    } catch (const FormatError& e) {
      throw fail(e.what());
    }
    if (f.size() != 9) throw fail("expected 9 fields, found " + std::to_string(f.size()));

    UtteranceRecord record;
    record.id = f[0];
    if (record.id.empty()) throw fail("empty id");
    if (f[1].empty()) throw fail("empty audio_path");
    fs::path audio(f[1]);
    record.audio_path = audio.is_absolute() ? audio.string() : (base / audio).lexically_normal().string();
    try {
      if (f[2].empty() && !expected) throw fail("empty dataset column");
      record.dataset = f[2].empty() ? dataset : parse_dataset_id(f[2]);
    } catch (const InvalidInput& e) {
      throw fail(e.what());
    }
    if (expected && record.dataset != dataset) {
      throw fail("dataset column '" + f[2] + "' does not match manifest dataset " +
                 std::string(to_string(dataset)));
    }
    if (!seen.insert(record.id).second) {
      throw InvalidInput(path + ": row " + std::to_string(row) + ": duplicate id '" + record.id + "'");
    }

    if (!f[4].empty()) {
      std::optional<Emotion> emotion;
      try {
        emotion = unify_emotion_label(f[4], expected ? record.dataset : DatasetId::SYNTH, options.labels);
      } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": row " + std::to_string(row) + ": " + e.what());
      }
      if (!emotion) {
        ++manifest.provenance.skipped;
        manifest.provenance.skipped_rows.push_back("row " + std::to_string(row) + ": label '" +
                                                   f[4] + "' dropped");
        continue;
      }
      record.emotion = emotion;
    }
    if (!f[5].empty()) {
      try {
        record.spoof = parse_spoof_label(f[5]);
      } catch (const InvalidInput& e) {
        throw fail(e.what());
      }
    }
    record.attack_id = optional_field(f[6]);
    record.speaker_id = optional_field(f[7]);
    record.content_id = optional_field(f[8]);
    if (record.attack_id && !record.spoof) throw fail("attack_id given without a spoof label");
    if (!record.emotion && !record.spoof) throw fail("row has neither an emotion nor a spoof label");

    if (options.probe_audio) {
      const audio::WavInfo info = audio::read_wav_info(record.audio_path);
      record.sample_rate = info.sample_rate;
      record.duration = static_cast<double>(info.frames) / info.sample_rate;
      if (record.duration <= 0.0) throw fail("audio file " + record.audio_path + " is empty");
    }
    if (!f[3].empty()) {
      try {
        splits.emplace(record.id, parse_split(f[3]));
      } catch (const InvalidInput& e) {
        throw fail(e.what());
      }
      ++with_split;
    }
    manifest.records.push_back(std::move(record));
  }
  if (with_split != 0 && with_split != manifest.records.size()) {
    throw FormatError(path + ": split column must be filled for every row or for none");
  }
  manifest.split_of = std::move(splits);
  return manifest;
}

}  // namespace

CorpusManifest load_manifest(const std::string& path, DatasetId dataset, const LoadOptions& options) {
  return load_any(path, dataset, options);
}

CorpusManifest load_unified_manifest(const std::string& path, const LoadOptions& options) {
  return load_any(path, std::nullopt, options);
}

void write_manifest(const std::string& path, const CorpusManifest& manifest) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  auto opt = [](const std::optional<std::string>& v) { return v ? csv_escape(*v) : std::string(); };
  for (const auto& r : manifest.records) {
    auto split = manifest.split_of.find(r.id);
    out << csv_escape(r.id) << ',' << csv_escape(r.audio_path) << ',' << to_string(r.dataset) << ','
        << (split != manifest.split_of.end() ? to_string(split->second) : std::string_view()) << ','
        << (r.emotion ? to_string(*r.emotion) : std::string_view()) << ','
        << (r.spoof ? to_string(*r.spoof) : std::string_view()) << ',' << opt(r.attack_id) << ','
        << opt(r.speaker_id) << ',' << opt(r.content_id) << '\n';
  }
  binary::write_file_atomically(path, out.str());
}

CorpusManifest merge_manifests(const std::vector<CorpusManifest>& parts) {
  CorpusManifest merged;
  std::set<std::string> seen;
  for (const auto& part : parts) {
    for (const auto& record : part.records) {
      if (!seen.insert(record.id).second) {
        throw InvalidInput("merge_manifests: duplicate id '" + record.id + "'");
      }
      merged.records.push_back(record);
    }
    merged.split_of.insert(part.split_of.begin(), part.split_of.end());
    auto& p = merged.provenance;
    p.sources.insert(p.sources.end(), part.provenance.sources.begin(), part.provenance.sources.end());
    p.skipped += part.provenance.skipped;
    p.skipped_rows.insert(p.skipped_rows.end(), part.provenance.skipped_rows.begin(),
                          part.provenance.skipped_rows.end());
    p.notes.insert(p.notes.end(), part.provenance.notes.begin(), part.provenance.notes.end());
    p.warnings.insert(p.warnings.end(), part.provenance.warnings.begin(),
                      part.provenance.warnings.end());
  }
  return merged;
}

}  // namespace emobridge::corpus

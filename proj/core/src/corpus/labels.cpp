#include "emobridge/corpus/labels.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "emobridge/error.hpp"

namespace emobridge::corpus {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

enum class Target { angry, disgust, fear, happy, neutral, sad, surprise, calm };

struct Entry {
  std::string_view raw;
  Target target;
};

// TESS folders are e.g. OAF_angry, YAF_pleasant_surprised; file stems use "ps".
constexpr Entry kTess[] = {
    {"angry", Target::angry},     {"disgust", Target::disgust},
    {"fear", Target::fear},       {"happy", Target::happy},
    {"neutral", Target::neutral}, {"sad", Target::sad},
    {"ps", Target::surprise},     {"pleasant_surprise", Target::surprise},
    {"pleasant_surprised", Target::surprise},
};

// SAVEE file prefixes: a, d, f, h, n, sa, su.
constexpr Entry kSavee[] = {
    {"a", Target::angry},         {"d", Target::disgust},     {"f", Target::fear},
    {"h", Target::happy},         {"n", Target::neutral},     {"sa", Target::sad},
    {"su", Target::surprise},     {"anger", Target::angry},   {"disgust", Target::disgust},
    {"fear", Target::fear},       {"happiness", Target::happy}, {"neutral", Target::neutral},
    {"sadness", Target::sad},     {"surprise", Target::surprise},
};

// CREMA-D has six emotions and no surprise.
constexpr Entry kCremad[] = {
    {"ang", Target::angry},   {"dis", Target::disgust}, {"fea", Target::fear},
    {"hap", Target::happy},   {"neu", Target::neutral}, {"sad", Target::sad},
    {"angry", Target::angry}, {"disgust", Target::disgust}, {"fear", Target::fear},
    {"happy", Target::happy}, {"neutral", Target::neutral},
};

// RAVDESS filename field 3 (01..08) and the corresponding names.
constexpr Entry kRavdess[] = {
    {"01", Target::neutral}, {"02", Target::calm},     {"03", Target::happy},
    {"04", Target::sad},     {"05", Target::angry},    {"06", Target::fear},
    {"07", Target::disgust}, {"08", Target::surprise}, {"neutral", Target::neutral},
    {"calm", Target::calm},  {"happy", Target::happy}, {"sad", Target::sad},
    {"angry", Target::angry}, {"fearful", Target::fear}, {"disgust", Target::disgust},
    {"surprised", Target::surprise},
};

// ESD (and EmoFake, built on it) use five emotions.
constexpr Entry kEsd[] = {
    {"neutral", Target::neutral}, {"angry", Target::angry}, {"happy", Target::happy},
    {"sad", Target::sad},         {"surprise", Target::surprise},
};

constexpr Entry kSynth[] = {
    {"angry", Target::angry},     {"disgust", Target::disgust}, {"fear", Target::fear},
    {"happy", Target::happy},     {"neutral", Target::neutral}, {"sad", Target::sad},
    {"surprise", Target::surprise},
};

template <std::size_t N>
constexpr std::array<std::string_view, N> raw_names(const Entry (&table)[N]) {
  std::array<std::string_view, N> names{};
  for (std::size_t i = 0; i < N; ++i) names[i] = table[i].raw;
  return names;
}

constexpr auto kTessNames = raw_names(kTess);
constexpr auto kSaveeNames = raw_names(kSavee);
constexpr auto kCremadNames = raw_names(kCremad);
constexpr auto kRavdessNames = raw_names(kRavdess);
constexpr auto kEsdNames = raw_names(kEsd);
constexpr auto kSynthNames = raw_names(kSynth);

std::span<const Entry> table_for(DatasetId dataset) {
  switch (dataset) {
    case DatasetId::TESS: return kTess;
    case DatasetId::SAVEE: return kSavee;
    case DatasetId::CREMAD: return kCremad;
    case DatasetId::RAVDESS: return kRavdess;
    case DatasetId::ESD:
    case DatasetId::EMOFAKE: return kEsd;
    case DatasetId::SYNTH: return kSynth;
    case DatasetId::FOR:
    case DatasetId::ITW:
    case DatasetId::ASV19LA: return {};
  }
  throw InvalidInput("unknown dataset id");
}

}  // namespace

std::string_view to_string(DatasetId id) {
  switch (id) {
    case DatasetId::TESS: return "TESS";
    case DatasetId::SAVEE: return "SAVEE";
    case DatasetId::CREMAD: return "CREMAD";
    case DatasetId::RAVDESS: return "RAVDESS";
    case DatasetId::ESD: return "ESD";
    case DatasetId::FOR: return "FOR";
    case DatasetId::ITW: return "ITW";
    case DatasetId::ASV19LA: return "ASV19LA";
    case DatasetId::EMOFAKE: return "EMOFAKE";
    case DatasetId::SYNTH: return "SYNTH";
  }
  throw InvalidInput("unknown dataset id");
}

std::string_view to_string(Emotion emotion) {
  switch (emotion) {
    case Emotion::angry: return "angry";
    case Emotion::disgust: return "disgust";
    case Emotion::fear: return "fear";
    case Emotion::happy: return "happy";
    case Emotion::neutral: return "neutral";
    case Emotion::sad: return "sad";
    case Emotion::surprise: return "surprise";
  }
  throw InvalidInput("unknown emotion");
}

std::string_view to_string(SpoofLabel label) {
  return label == SpoofLabel::bonafide ? "bonafide" : "spoof";
}

DatasetId parse_dataset_id(std::string_view name) {
  const std::string key = lower(name);
  for (auto id : {DatasetId::TESS, DatasetId::SAVEE, DatasetId::CREMAD, DatasetId::RAVDESS,
                  DatasetId::ESD, DatasetId::FOR, DatasetId::ITW, DatasetId::ASV19LA,
                  DatasetId::EMOFAKE, DatasetId::SYNTH}) {
    if (lower(to_string(id)) == key) return id;
  }
  if (key == "crema-d") return DatasetId::CREMAD;
  throw InvalidInput("unknown dataset id '" + std::string(name) + "'");
}

Emotion parse_emotion(std::string_view canonical_name) {
  const std::string key = lower(canonical_name);
  for (Emotion e : kAllEmotions) {
    if (to_string(e) == key) return e;
  }
  throw InvalidInput("unknown emotion '" + std::string(canonical_name) + "'");
}

SpoofLabel parse_spoof_label(std::string_view name) {
  const std::string key = lower(name);
  if (key == "bonafide" || key == "bona-fide" || key == "bona_fide") return SpoofLabel::bonafide;
  if (key == "spoof") return SpoofLabel::spoof;
  throw InvalidInput("unknown spoof label '" + std::string(name) + "' (expected bonafide|spoof)");
}

bool has_emotion_labels(DatasetId dataset) { return !table_for(dataset).empty(); }

std::optional<Emotion> unify_emotion_label(std::string_view raw, DatasetId dataset,
                                           const LabelOptions& options) {
  const auto table = table_for(dataset);
  if (table.empty()) {
    throw InvalidInput("dataset " + std::string(to_string(dataset)) + " carries no emotion labels");
  }
  const std::string key = lower(raw);
  for (const Entry& entry : table) {
    if (entry.raw != key) continue;
    if (entry.target == Target::calm) {
      if (options.merge_calm_into_neutral) return Emotion::neutral;
      return std::nullopt;
    }
    return static_cast<Emotion>(static_cast<int>(entry.target));
  }
  std::string known;
  for (const Entry& entry : table) {
    if (!known.empty()) known += ", ";
    known += entry.raw;
  }
  throw InvalidInput("unknown " + std::string(to_string(dataset)) + " emotion label '" +
                     std::string(raw) + "' (known: " + known + ")");
}

std::span<const std::string_view> documented_labels(DatasetId dataset) {
  switch (dataset) {
    case DatasetId::TESS: return kTessNames;
    case DatasetId::SAVEE: return kSaveeNames;
    case DatasetId::CREMAD: return kCremadNames;
    case DatasetId::RAVDESS: return kRavdessNames;
    case DatasetId::ESD:
    case DatasetId::EMOFAKE: return kEsdNames;
    case DatasetId::SYNTH: return kSynthNames;
    case DatasetId::FOR:
    case DatasetId::ITW:
    case DatasetId::ASV19LA: return {};
  }
  throw InvalidInput("unknown dataset id");
}

}  // namespace emobridge::corpus

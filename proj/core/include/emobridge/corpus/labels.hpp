#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace emobridge::corpus {

enum class DatasetId { TESS, SAVEE, CREMAD, RAVDESS, ESD, FOR, ITW, ASV19LA, EMOFAKE, SYNTH };

/// The unified 7-class emotion space; the order is the head's output order.
enum class Emotion { angry, disgust, fear, happy, neutral, sad, surprise };
inline constexpr std::size_t kEmotionCount = 7;
inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::angry, Emotion::disgust, Emotion::fear,    Emotion::happy,
    Emotion::neutral, Emotion::sad,   Emotion::surprise};

enum class SpoofLabel { bonafide, spoof };

std::string_view to_string(DatasetId id);
std::string_view to_string(Emotion emotion);
std::string_view to_string(SpoofLabel label);

/// Case-insensitive; throws InvalidInput on an unknown name.
DatasetId parse_dataset_id(std::string_view name);
Emotion parse_emotion(std::string_view canonical_name);
SpoofLabel parse_spoof_label(std::string_view name);

inline std::size_t index_of(Emotion emotion) { return static_cast<std::size_t>(emotion); }

struct LabelOptions {
  // RAVDESS "calm" has no counterpart in the 7-class space.
  bool merge_calm_into_neutral = false;
};

/// Maps a raw dataset label into the 7-class space.
/// Returns std::nullopt when the label is deliberately dropped (RAVDESS calm by default).
/// Throws InvalidInput for labels outside the dataset's documented set and for
/// datasets that carry no emotion annotation (FOR, ITW, ASV19LA).
std::optional<Emotion> unify_emotion_label(std::string_view raw, DatasetId dataset,
                                           const LabelOptions& options = {});

/// Every raw label string the mapping table accepts for a dataset (lower case).
std::span<const std::string_view> documented_labels(DatasetId dataset);

/// True for datasets that ship emotion annotations.
bool has_emotion_labels(DatasetId dataset);

}  // namespace emobridge::corpus

#pragma once

#include <span>
#include <string>
#include <vector>

#include "emobridge/audio/wav.hpp"
#include "emobridge/encoders/bundle.hpp"

namespace emobridge::encoders {

// Built-in utterance-level descriptor sets. Both use 25 ms / 10 ms frames.
//   EGEMAPS_LIKE: {log_energy, zcr, spectral_centroid, spectral_flux, pitch}
//                 x {mean, std, p10, p90}                          = 20 values
//   IS09_LIKE:    the same five descriptors plus mfcc1..mfcc12
//                 x {mean, std, min, max, range, slope}            = 102 values
// EXTERNAL vectors come from an outside tool through a sidecar file.
enum class FunctionalSet { EGEMAPS_LIKE, IS09_LIKE, EXTERNAL };
std::string_view to_string(FunctionalSet set);
FunctionalSet parse_functional_set(std::string_view name);

// Pitch functionals take this value when no frame is voiced.
inline constexpr double kUnvoicedPitch = -1.0;

struct FunctionalVector {
  FunctionalSet set = FunctionalSet::EGEMAPS_LIKE;
  std::vector<double> values;
  std::vector<std::string> names;
};

/// 20 for EGEMAPS_LIKE, 102 for IS09_LIKE. Throws for EXTERNAL.
std::size_t functional_length(FunctionalSet set);
std::vector<std::string> functional_names(FunctionalSet set);

/// Requires at least 3 frames. EXTERNAL is rejected here; use read_external_functionals.
FunctionalVector extract_functionals(const audio::Waveform& waveform, FunctionalSet set);

/// Sidecar: u32 LE length prefix followed by that many float32 LE values.
FunctionalVector read_external_functionals(const std::string& path, std::size_t expected_length);
void write_external_functionals(const std::string& path, std::span<const float> values);

/// Functionals as a single-layer, single-row feature set so they flow through probing.
LayerFeatureSet as_single_layer(const std::string& utterance_id, const FunctionalVector& vector);

}  // namespace emobridge::encoders

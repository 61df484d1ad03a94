#pragma once

#include <string>
#include <vector>

#include "emobridge/audio/wav.hpp"
#include "emobridge/encoders/bundle.hpp"

namespace emobridge::diagnostics {

struct AttentionProfile {
  std::string condition;  // "model_ori" or "model_new"
  std::size_t frames = 0;
  std::size_t samples = 0;
  // Per layer: attention weight on each key position, averaged over heads,
  // then query positions, then utterances.
  std::vector<std::vector<double>> per_layer;
};

/// Every waveform is cropped to the length that yields exactly `frames` encoder
/// steps so positions line up across utterances. Shorter waveforms are rejected.
/// frames == 0 picks the largest count every waveform supports.
AttentionProfile attention_profile(const encoders::EncoderBundle& bundle, const std::vector<audio::Waveform>& sample,
                                   std::string condition, std::size_t frames = 0);

/// Per-layer cosine similarity of the mean-attention vectors.
std::vector<double> attention_overlap(const AttentionProfile& before, const AttentionProfile& after);

/// layer,position,value,condition
std::string attention_csv(const std::vector<AttentionProfile>& profiles);

}  // namespace emobridge::diagnostics

#include "emobridge/diagnostics/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "emobridge/encoders/toy_encoder.hpp"
#include "emobridge/error.hpp"

namespace emobridge::diagnostics {

AttentionProfile attention_profile(const encoders::EncoderBundle& bundle, const std::vector<audio::Waveform>& sample,
                                   std::string condition, std::size_t frames) {
  if (!bundle.exposes_attention()) throw InvalidInput("attention_profile: encoder does not expose attention");
  if (sample.empty()) throw InvalidInput("attention_profile: empty sample");
  const auto spec = encoders::toy::frame_spec(bundle.sample_rate());
  if (frames == 0) {
    std::size_t shortest = sample.front().samples.size();
    for (const auto& wave : sample) shortest = std::min(shortest, wave.samples.size());
    frames = encoders::toy::frame_count(shortest, bundle.sample_rate());
    if (frames == 0) throw InvalidInput("attention_profile: sample too short for one frame");
  }
  const std::size_t needed = spec.window + (frames - 1) * spec.hop;

  AttentionProfile profile;
  profile.condition = std::move(condition);
  profile.frames = frames;
  profile.samples = sample.size();
  profile.per_layer.assign(bundle.layer_count(), std::vector<double>(frames, 0.0));
  for (const auto& wave : sample) {
    if (wave.samples.size() < needed) {
      throw InvalidInput("attention_profile: waveform of " + std::to_string(wave.samples.size()) +
                         " samples is shorter than the " + std::to_string(needed) + " needed for " +
                         std::to_string(frames) + " frames");
    }
    audio::Waveform cropped{{wave.samples.begin(), wave.samples.begin() + static_cast<std::ptrdiff_t>(needed)},
                            wave.sample_rate};
    const auto maps = encoders::attention_maps(bundle, cropped);
    for (std::size_t l = 0; l < maps.size(); ++l) {
      // Single head: average over queries directly.
      const VectorD column_mean = maps[l].colwise().mean().transpose();
      for (std::size_t k = 0; k < frames; ++k) profile.per_layer[l][k] += column_mean(static_cast<Eigen::Index>(k));
    }
  }
  for (auto& layer : profile.per_layer) {
    for (double& v : layer) v /= static_cast<double>(sample.size());
  }
  return profile;
}

std::vector<double> attention_overlap(const AttentionProfile& before, const AttentionProfile& after) {
  if (before.per_layer.size() != after.per_layer.size()) {
    throw InvalidInput("attention_overlap: layer counts differ (" + std::to_string(before.per_layer.size()) + " vs " +
                       std::to_string(after.per_layer.size()) + ")");
  }
  std::vector<double> out;
  for (std::size_t l = 0; l < before.per_layer.size(); ++l) {
    const auto& a = before.per_layer[l];
    const auto& b = after.per_layer[l];
    if (a.size() != b.size()) throw InvalidInput("attention_overlap: time resolution differs in layer " + std::to_string(l));
    if (a == b) {
      out.push_back(1.0);
      continue;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) throw NumericalError("attention_overlap: zero attention vector in layer " + std::to_string(l));
    out.push_back(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
  }
  return out;
}

std::string attention_csv(const std::vector<AttentionProfile>& profiles) {
  std::string out = "layer,position,value,condition\n";
  char buffer[64];
  for (const auto& profile : profiles) {
    for (std::size_t l = 0; l < profile.per_layer.size(); ++l) {
      for (std::size_t k = 0; k < profile.per_layer[l].size(); ++k) {
        std::snprintf(buffer, sizeof buffer, "%.17g", profile.per_layer[l][k]);
        out += std::to_string(l) + "," + std::to_string(k) + "," + buffer + "," + profile.condition + "\n";
      }
    }
  }
  return out;
}

}  // namespace emobridge::diagnostics

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace emobridge::audio {

/// Mono signal with samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Reads a 16-bit little-endian PCM mono WAV file.
Waveform read_wav(const std::string& path);

struct WavInfo {
  int sample_rate = 0;
  std::size_t frames = 0;
};

/// Header-only probe of a 16-bit PCM mono WAV file.
WavInfo read_wav_info(const std::string& path);

/// Writes 16-bit PCM mono. Samples are clipped to [-1, 1] and rounded to nearest.
void write_wav(const std::string& path, const Waveform& waveform);

}  // namespace emobridge::audio

#pragma once

#include "emobridge/audio/wav.hpp"

namespace emobridge::audio {

// Rational-ratio polyphase resampler with a Blackman-windowed sinc
// low-pass. Only the taps that hit non-zero upsampled input are evaluated.
Waveform resample(const Waveform& input, int target_rate);

/// read_wav followed by resample when the file rate differs.
Waveform read_wav_at(const std::string& path, int target_rate);

}  // namespace emobridge::audio

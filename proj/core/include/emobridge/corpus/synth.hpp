#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "emobridge/audio/wav.hpp"
#include "emobridge/corpus/manifest.hpp"
#include "emobridge/rng.hpp"

namespace emobridge::corpus {

// Desk-scale stand-in for the emotion and spoof corpora. Every utterance is a
// harmonic voice whose prosody (pitch level, contour depth and rate, micro
// jitter, loudness, spectral tilt) is drawn from an emotion-specific family.
// Spoofed utterances reproduce the same voice but flatten the emotional
// colouring toward the neutral family and drop micro jitter, so spoof and
// emotion cues share one generative mechanism.
struct SynthConfig {
  std::array<std::size_t, kEmotionCount> emotion_counts{20, 20, 20, 20, 20, 20, 20};
  std::size_t bonafide = 100;
  std::size_t spoof = 100;
  double min_duration = 0.8;
  double max_duration = 1.2;
  int sample_rate = 16000;
  std::size_t speakers = 6;
  std::size_t contents = 4;
  std::vector<std::string> attack_ids{"S1", "S2", "S3"};
  // Fraction of the emotional colouring (deviation of every prosody parameter
  // from the neutral family) a spoof keeps.
  double spoof_prosody_scale = 0.35;
  // Fraction of the micro jitter a spoof keeps.
  double spoof_jitter_scale = 0.1;
  // Noise floor multiplier for spoofs (vocoder-like artifact); 1 = none.
  double spoof_noise_scale = 1.0;
};

/// Parameters of one utterance; exposed for tests and the benchmark.
struct VoiceParams {
  double duration = 1.0;
  int sample_rate = 16000;
  double f0_hz = 150.0;
  double contour_semitones = 2.0;
  double contour_rate_hz = 3.0;
  double contour_phase = 0.0;
  double declination_semitones = 0.0;
  double jitter_semitones = 0.3;
  double tilt = 1.0;
  double loudness = 0.1;       // target RMS
  double formant_scale = 1.0;  // speaker vocal-tract factor
  double bandwidth_scale = 1.0;
  double syllable_depth = 0.6;
  std::size_t content = 0;
  double noise = 0.01;
};

audio::Waveform synthesize_voice(const VoiceParams& params, Rng& rng);

/// Emotion-family prosody for a speaker; spoof = true applies the spoofing transform.
VoiceParams voice_for(Emotion emotion, std::size_t speaker, std::size_t content, bool spoof,
                      const std::string& attack_id, const SynthConfig& config, Rng& rng);

/// Generates WAVs under out_dir/audio/ plus out_dir/manifest.csv and returns the manifest.
/// Records without a spoof label form the emotion corpus; records with one form the
/// spoof corpus (they also carry emotion, speaker and content metadata).
CorpusManifest synth_corpus(const SynthConfig& config, std::uint64_t seed, const std::string& out_dir);

}  // namespace emobridge::corpus

#include "emobridge/corpus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "emobridge/error.hpp"

namespace emobridge::corpus {

namespace {

namespace fs = std::filesystem;

struct Vowel {
  double f1, f2, f3;
};

constexpr Vowel kVowels[] = {
    {730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240}, {530, 1840, 2480}, {570, 840, 2410}};

struct Family {
  double pitch_mult;
  double contour_st;
  double rate_hz;
  double declination_st;
  double jitter_st;
  double tilt;
  double loudness;
  double syllable_depth;
};

// Indexed by Emotion.
constexpr Family kFamilies[kEmotionCount] = {
    {1.20, 4.0, 4.5, -2.0, 0.50, 0.7, 0.16, 0.8},  // angry
    {0.92, 2.5, 1.8, -3.0, 0.35, 1.2, 0.09, 0.5},  // disgust
    {1.30, 2.0, 7.0, 1.0, 0.70, 1.1, 0.07, 0.6},   // fear
    {1.25, 5.0, 3.0, 1.5, 0.45, 0.9, 0.13, 0.7},   // happy
    {1.00, 1.2, 2.5, -1.0, 0.25, 1.0, 0.10, 0.5},  // neutral
    {0.85, 1.5, 1.5, -2.5, 0.30, 1.5, 0.06, 0.4},  // sad
    {1.35, 6.0, 2.0, 4.0, 0.40, 0.9, 0.12, 0.7},   // surprise
};

struct Speaker {
  double f0_hz;
  double formant_scale;
  double gain;
};

Speaker speaker_traits(std::size_t speaker) {
  // Fixed per speaker index so the same speaker sounds alike across corpora.
  Rng rng(mix_seed(0x5bea6e5ULL + speaker));
  return {rng.uniform(105.0, 230.0), rng.uniform(0.88, 1.15), rng.uniform(0.85, 1.15)};
}

std::vector<std::size_t> content_vowels(std::size_t content) {
  Rng rng(mix_seed(0xc0a7e47ULL + content));
  const std::size_t syllables = 3 + static_cast<std::size_t>(rng.below(4));
  std::vector<std::size_t> vowels(syllables);
  for (auto& v : vowels) v = static_cast<std::size_t>(rng.below(std::size(kVowels)));
  return vowels;
}

double jittered(double value, double spread, Rng& rng) {
  return value * std::max(0.2, 1.0 + spread * rng.normal());
}

}  // namespace

audio::Waveform synthesize_voice(const VoiceParams& p, Rng& rng) {
  if (p.duration <= 0.0 || p.sample_rate <= 0 || p.f0_hz <= 0.0) {
    throw InvalidInput("synthesize_voice: duration, rate and f0 must be positive");
  }
  const auto n = static_cast<std::size_t>(std::lround(p.duration * p.sample_rate));
  const double sr = p.sample_rate;
  const double nyquist_guard = std::min(3800.0, 0.45 * sr);
  const auto vowels = content_vowels(p.content);
  const double syllables = static_cast<double>(vowels.size());

  // Slow random pitch perturbation ("micro jitter").
  double jit_freq[3], jit_phase[3];
  for (int i = 0; i < 3; ++i) {
    jit_freq[i] = rng.uniform(6.0, 14.0);
    jit_phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  audio::Waveform wave;
  wave.sample_rate = p.sample_rate;
  wave.samples.assign(n, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double progress = t / p.duration;
    double semitones = 0.5 * p.contour_semitones *
                           std::sin(2.0 * std::numbers::pi * p.contour_rate_hz * t + p.contour_phase) +
                       p.declination_semitones * (progress - 0.5);
    for (int j = 0; j < 3; ++j) {
      semitones += p.jitter_semitones / std::sqrt(3.0) *
                   std::sin(2.0 * std::numbers::pi * jit_freq[j] * t + jit_phase[j]);
    }
    const double f0 = p.f0_hz * std::exp2(semitones / 12.0);
    phase += 2.0 * std::numbers::pi * f0 / sr;
    if (phase > 2.0 * std::numbers::pi * 1024.0) phase = std::fmod(phase, 2.0 * std::numbers::pi);

    const auto syllable = std::min(static_cast<std::size_t>(progress * syllables), vowels.size() - 1);
    const Vowel& v = kVowels[vowels[syllable]];
    const double formants[3] = {v.f1 * p.formant_scale, v.f2 * p.formant_scale, v.f3 * p.formant_scale};
    const double bandwidths[3] = {80.0 * p.bandwidth_scale, 100.0 * p.bandwidth_scale,
                                  150.0 * p.bandwidth_scale};

    double sample = 0.0;
    for (int k = 1; k * f0 < nyquist_guard; ++k) {
      const double f = k * f0;
      double gain = 0.05;
      for (int m = 0; m < 3; ++m) {
        const double x = (f - formants[m]) / bandwidths[m];
        gain += 1.0 / (1.0 + x * x);
      }
      sample += gain * std::pow(static_cast<double>(k), -p.tilt) * std::sin(k * phase);
    }
    const double s = std::sin(std::numbers::pi * syllables * progress);
    double envelope = (1.0 - p.syllable_depth) + p.syllable_depth * s * s;
    const double edge = std::min(t, p.duration - t);
    if (edge < 0.01) envelope *= std::max(edge, 0.0) / 0.01;
    wave.samples[i] = envelope * (sample + p.noise * rng.normal());
  }

  double energy = 0.0;
  for (double x : wave.samples) energy += x * x;
  const double rms = std::sqrt(energy / static_cast<double>(std::max<std::size_t>(n, 1)));
  if (rms > 0.0) {
    for (double& x : wave.samples) x *= p.loudness / rms;
  }
  return wave;
}

VoiceParams voice_for(Emotion emotion, std::size_t speaker, std::size_t content, bool spoof,
                      const std::string& attack_id, const SynthConfig& config, Rng& rng) {
  const Family& family = kFamilies[index_of(emotion)];
  const Speaker traits = speaker_traits(speaker);
  VoiceParams p;
  p.sample_rate = config.sample_rate;
  p.duration = rng.uniform(config.min_duration, config.max_duration);
  p.f0_hz = traits.f0_hz * jittered(family.pitch_mult, 0.05, rng);
  p.contour_semitones = jittered(family.contour_st, 0.15, rng);
  p.contour_rate_hz = jittered(family.rate_hz, 0.15, rng);
  p.contour_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.declination_semitones = family.declination_st * jittered(1.0, 0.2, rng);
  p.jitter_semitones = jittered(family.jitter_st, 0.15, rng);
  p.tilt = jittered(family.tilt, 0.08, rng);
  p.loudness = jittered(family.loudness, 0.1, rng) * traits.gain;
  p.formant_scale = traits.formant_scale;
  p.syllable_depth = std::clamp(jittered(family.syllable_depth, 0.1, rng), 0.0, 0.95);
  p.content = content;
  if (spoof) {
    const Family& neutral = kFamilies[index_of(Emotion::neutral)];
    const double keep = config.spoof_prosody_scale;
    auto toward_neutral = [keep](double value, double reference) { return reference + keep * (value - reference); };
    p.f0_hz = traits.f0_hz * toward_neutral(p.f0_hz / traits.f0_hz, neutral.pitch_mult);
    p.contour_semitones = toward_neutral(p.contour_semitones, neutral.contour_st);
    p.contour_rate_hz = toward_neutral(p.contour_rate_hz, neutral.rate_hz);
    p.declination_semitones = toward_neutral(p.declination_semitones, neutral.declination_st);
    p.tilt = toward_neutral(p.tilt, neutral.tilt);
    p.loudness = traits.gain * toward_neutral(p.loudness / traits.gain, neutral.loudness);
    p.syllable_depth = toward_neutral(p.syllable_depth, neutral.syllable_depth);
    p.jitter_semitones *= config.spoof_jitter_scale;
    p.noise *= config.spoof_noise_scale;
    const auto& attacks = config.attack_ids;
    const auto which = attacks.empty() ? 0
                                       : static_cast<std::size_t>(std::find(attacks.begin(), attacks.end(), attack_id) -
                                                                  attacks.begin());
    if (which % 3 == 1) p.bandwidth_scale = 2.0;
    if (which % 3 == 2) p.syllable_depth *= 0.3;
  }
  return p;
}

CorpusManifest synth_corpus(const SynthConfig& config, std::uint64_t seed, const std::string& out_dir) {
  std::size_t emotion_total = 0;
  for (auto c : config.emotion_counts) emotion_total += c;
  if (emotion_total == 0 && config.bonafide + config.spoof == 0) {
    throw InvalidInput("synth_corpus: all counts are zero");
  }
  if (config.speakers == 0 || config.contents == 0) {
    throw InvalidInput("synth_corpus: speakers and contents must be positive");
  }
  if (config.spoof > 0 && config.attack_ids.empty()) {
    throw InvalidInput("synth_corpus: spoof utterances need at least one attack id");
  }
  if (config.min_duration <= 0.0 || config.max_duration < config.min_duration) {
    throw InvalidInput("synth_corpus: invalid duration range");
  }

  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "audio", ec);
  if (ec) throw InvalidInput("synth_corpus: cannot create " + (root / "audio").string() + ": " + ec.message());

  CorpusManifest manifest;
  Rng master(seed);
  std::size_t serial = 0;
  auto emit = [&](const std::string& id, Emotion emotion, std::optional<SpoofLabel> label,
                  const std::string& attack) {
    Rng rng = master.fork(serial++);
    const std::size_t speaker = static_cast<std::size_t>(rng.below(config.speakers));
    const std::size_t content = static_cast<std::size_t>(rng.below(config.contents));
    const bool is_spoof = label == SpoofLabel::spoof;
    const VoiceParams params = voice_for(emotion, speaker, content, is_spoof, attack, config, rng);
    const audio::Waveform wave = synthesize_voice(params, rng);
    const fs::path file = root / "audio" / (id + ".wav");
    audio::write_wav(file.string(), wave);

    UtteranceRecord record;
    record.id = id;
    record.audio_path = file.string();
    record.dataset = DatasetId::SYNTH;
    record.sample_rate = wave.sample_rate;
    record.duration = wave.duration();
    record.emotion = emotion;
    record.spoof = label;
    if (is_spoof) record.attack_id = attack;
    record.speaker_id = "spk" + std::to_string(speaker);
    record.content_id = "txt" + std::to_string(content);
    manifest.records.push_back(std::move(record));
  };

  for (Emotion emotion : kAllEmotions) {
    for (std::size_t i = 0; i < config.emotion_counts[index_of(emotion)]; ++i) {
      emit("emo_" + std::string(to_string(emotion)) + "_" + std::to_string(i), emotion, std::nullopt, "");
    }
  }
  Rng label_rng = master.fork(0xdf);
  for (std::size_t i = 0; i < config.bonafide; ++i) {
    const auto emotion = kAllEmotions[label_rng.below(kEmotionCount)];
    emit("df_bona_" + std::to_string(i), emotion, SpoofLabel::bonafide, "");
  }
  for (std::size_t i = 0; i < config.spoof; ++i) {
    const auto emotion = kAllEmotions[label_rng.below(kEmotionCount)];
    const auto& attack = config.attack_ids[i % config.attack_ids.size()];
    emit("df_spoof_" + std::to_string(i), emotion, SpoofLabel::spoof, attack);
  }

  manifest.provenance.notes.push_back("synthetic corpus, seed " + std::to_string(seed));
  CorpusManifest on_disk = manifest;
  for (auto& record : on_disk.records) record.audio_path = "audio/" + record.id + ".wav";
  write_manifest((root / "manifest.csv").string(), on_disk);
  return manifest;
}

}  // namespace emobridge::corpus

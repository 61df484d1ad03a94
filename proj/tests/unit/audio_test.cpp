#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "emobridge/audio/resample.hpp"
#include "emobridge/audio/spectral.hpp"
#include "emobridge/audio/wav.hpp"
#include "emobridge/encoders/functionals.hpp"
#include "emobridge/error.hpp"
#include "test_support.hpp"

using namespace emobridge;

namespace {

double named(const encoders::FunctionalVector& v, const std::string& name) {
  for (std::size_t i = 0; i < v.names.size(); ++i) {
    if (v.names[i] == name) return v.values[i];
  }
  ADD_FAILURE() << "no functional named " << name;
  return 0.0;
}

}  // namespace

TEST(Wav, RoundTripWithinQuantisation) {
  testing_support::TempDir dir("wav");
  const auto wave = testing_support::sine(300.0, 0.25);
  audio::write_wav(dir.file("a.wav"), wave);
  const auto back = audio::read_wav(dir.file("a.wav"));
  ASSERT_EQ(back.samples.size(), wave.samples.size());
  EXPECT_EQ(back.sample_rate, 16000);
  for (std::size_t i = 0; i < wave.samples.size(); ++i) EXPECT_NEAR(back.samples[i], wave.samples[i], 1.0 / 32767);
  const auto info = audio::read_wav_info(dir.file("a.wav"));
  EXPECT_EQ(info.frames, wave.samples.size());
}

TEST(Wav, RejectsGarbage) {
  testing_support::TempDir dir("wav_bad");
  std::ofstream(dir.file("x.wav")) << "RIFFnonsense";
  EXPECT_THROW(audio::read_wav(dir.file("x.wav")), FormatError);
}

TEST(Spectral, FrameCount) {
  const audio::FrameSpec spec{400, 320, 512};
  EXPECT_EQ(audio::frame_count(399, spec), 0u);
  EXPECT_EQ(audio::frame_count(400, spec), 1u);
  EXPECT_EQ(audio::frame_count(16000, spec), 1u + (16000 - 400) / 320);
}

TEST(Spectral, PowerPeakAtToneBin) {
  const audio::FrameSpec spec{400, 160, 512};
  const auto wave = testing_support::sine(1000.0, 0.1);
  const auto power = audio::power_spectrogram(wave.samples, spec);
  Eigen::Index peak = 0;
  power.row(0).maxCoeff(&peak);
  EXPECT_EQ(peak, 32);  // 1000 Hz * 512 / 16000
}

TEST(Resample, PreservesToneAndLength) {
  const auto wave = testing_support::sine(440.0, 0.5, 22050);
  const auto out = audio::resample(wave, 16000);
  EXPECT_EQ(out.sample_rate, 16000);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), 8000.0, 1.0);
  const auto f = encoders::extract_functionals(out, encoders::FunctionalSet::EGEMAPS_LIKE);
  EXPECT_NEAR(named(f, "spectral_centroid_mean"), 440.0, 5.0);
}

TEST(Functionals, ToneCentroidAndPitch) {
  const auto wave = testing_support::sine(440.0, 1.0);
  const auto f = encoders::extract_functionals(wave, encoders::FunctionalSet::EGEMAPS_LIKE);
  ASSERT_EQ(f.values.size(), 20u);
  EXPECT_NEAR(named(f, "spectral_centroid_mean"), 440.0, 5.0);
  EXPECT_NEAR(named(f, "pitch_mean"), 440.0, 5.0);
  const auto is09 = encoders::extract_functionals(wave, encoders::FunctionalSet::IS09_LIKE);
  EXPECT_EQ(is09.values.size(), 102u);
  EXPECT_EQ(is09.names.size(), 102u);
}

TEST(Functionals, UnvoicedPitchSentinel) {
  const auto f = encoders::extract_functionals(testing_support::noise(0.5, 9), encoders::FunctionalSet::EGEMAPS_LIKE);
  EXPECT_EQ(named(f, "pitch_mean"), encoders::kUnvoicedPitch);
}

TEST(Functionals, TooShortAndExternalSidecar) {
  EXPECT_THROW(encoders::extract_functionals(testing_support::sine(200, 0.02), encoders::FunctionalSet::IS09_LIKE),
               InvalidInput);
  testing_support::TempDir dir("ext");
  const std::vector<float> values = {1.5f, -2.0f, 3.25f};
  encoders::write_external_functionals(dir.file("f.bin"), values);
  const auto back = encoders::read_external_functionals(dir.file("f.bin"), 3);
  EXPECT_EQ(back.values, (std::vector<double>{1.5, -2.0, 3.25}));
  EXPECT_THROW(encoders::read_external_functionals(dir.file("f.bin"), 4), FormatError);
}

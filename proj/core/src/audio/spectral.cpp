#include "emobridge/audio/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "emobridge/error.hpp"

namespace emobridge::audio {

namespace {

// The FFTW planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

}  // namespace

FrameSpec FrameSpec::from_durations(int sample_rate, double window_seconds, double hop_seconds) {
  if (sample_rate <= 0 || window_seconds <= 0.0 || hop_seconds <= 0.0) {
    throw InvalidInput("FrameSpec: rate, window and hop must be positive");
  }
  FrameSpec spec;
  spec.window = static_cast<std::size_t>(std::lround(window_seconds * sample_rate));
  spec.hop = static_cast<std::size_t>(std::lround(hop_seconds * sample_rate));
  if (spec.window == 0 || spec.hop == 0) throw InvalidInput("FrameSpec: window or hop rounds to zero samples");
  spec.fft_size = 1;
  while (spec.fft_size < spec.window) spec.fft_size <<= 1;
  return spec;
}

std::size_t frame_count(std::size_t num_samples, const FrameSpec& spec) {
  if (num_samples < spec.window) return 0;
  return 1 + (num_samples - spec.window) / spec.hop;
}

PowerSpectrum::PowerSpectrum(const FrameSpec& spec) : spec_(spec), window_(spec.window) {
  if (spec.window == 0 || spec.fft_size < spec.window) {
    throw InvalidInput("PowerSpectrum: fft_size must be >= window > 0");
  }
  for (std::size_t n = 0; n < spec.window; ++n) {
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                      static_cast<double>(spec.window));
  }
  std::lock_guard lock(planner_mutex());
  input_ = fftw_alloc_real(spec.fft_size);
  output_ = fftw_alloc_complex(bins());
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(spec.fft_size), input_,
                               static_cast<fftw_complex*>(output_), FFTW_ESTIMATE);
  if (plan_ == nullptr) throw Error("FFTW failed to create a plan");
}

PowerSpectrum::~PowerSpectrum() {
  std::lock_guard lock(planner_mutex());
  if (plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(input_);
  fftw_free(output_);
}

void PowerSpectrum::compute(std::span<const double> frame, std::span<double> power) {
  if (frame.size() != spec_.window || power.size() != bins()) {
    throw InvalidInput("PowerSpectrum::compute: size mismatch");
  }
  for (std::size_t n = 0; n < spec_.window; ++n) input_[n] = frame[n] * window_[n];
  std::fill(input_ + spec_.window, input_ + spec_.fft_size, 0.0);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* out = static_cast<const fftw_complex*>(output_);
  for (std::size_t k = 0; k < bins(); ++k) {
    power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }
}

MatrixRM power_spectrogram(std::span<const double> samples, const FrameSpec& spec) {
  const std::size_t frames = frame_count(samples.size(), spec);
  PowerSpectrum spectrum(spec);
  MatrixRM result(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(spectrum.bins()));
  for (std::size_t t = 0; t < frames; ++t) {
    spectrum.compute(samples.subspan(t * spec.hop, spec.window),
                     std::span<double>(result.row(static_cast<Eigen::Index>(t)).data(),
                                       spectrum.bins()));
  }
  return result;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int sample_rate, std::size_t fft_size, std::size_t bands,
                             double fmin_hz, double fmax_hz) {
  if (bands == 0 || fmin_hz < 0.0 || fmax_hz <= fmin_hz || fmax_hz > 0.5 * sample_rate) {
    throw InvalidInput("MelFilterbank: invalid band layout");
  }
  const std::size_t bins = fft_size / 2 + 1;
  weights_ = MatrixRM::Zero(static_cast<Eigen::Index>(bands), static_cast<Eigen::Index>(bins));
  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(bands + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  for (std::size_t b = 0; b < bands; ++b) {
    const double left = edges[b], centre = edges[b + 1], right = edges[b + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > left && f <= centre) w = (f - left) / (centre - left);
      else if (f > centre && f < right) w = (right - f) / (right - centre);
      weights_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = w;
    }
  }
}

MatrixRM MelFilterbank::apply(const MatrixRM& power) const {
  if (power.cols() != weights_.cols()) throw InvalidInput("MelFilterbank::apply: bin count mismatch");
  return power * weights_.transpose();
}

MatrixRM dct_rows(const MatrixRM& input, std::size_t first, std::size_t count) {
  const auto n = static_cast<std::size_t>(input.cols());
  if (first + count > n) throw InvalidInput("dct_rows: requested coefficients exceed input width");
  MatrixRM basis(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t k = first + j;
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n; ++i) {
      basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                           (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
  }
  return input * basis;
}

}  // namespace emobridge::audio

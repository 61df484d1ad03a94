#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emobridge/matrix.hpp"

namespace emobridge::audio {

struct FrameSpec {
  std::size_t window = 400;
  std::size_t hop = 160;
  std::size_t fft_size = 512;

  /// Window and hop rounded to whole samples; fft_size is the next power of two >= window.
  static FrameSpec from_durations(int sample_rate, double window_seconds, double hop_seconds);
};

/// Frames fully inside the signal: 0 if shorter than one window, else 1 + (n - window) / hop.
std::size_t frame_count(std::size_t num_samples, const FrameSpec& spec);

/// Periodic-Hann windowed power spectrum of one frame, backed by an FFTW plan.
/// Not safe to share between threads; create one per thread.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(const FrameSpec& spec);
  ~PowerSpectrum();
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  std::size_t bins() const noexcept { return spec_.fft_size / 2 + 1; }
  const FrameSpec& spec() const noexcept { return spec_; }

  /// frame.size() must equal spec().window; power.size() must equal bins().
  void compute(std::span<const double> frame, std::span<double> power);

 private:
  FrameSpec spec_;
  std::vector<double> window_;
  double* input_ = nullptr;
  void* output_ = nullptr;
  void* plan_ = nullptr;
};

/// T x bins power spectrogram of all complete frames.
MatrixRM power_spectrogram(std::span<const double> samples, const FrameSpec& spec);

/// Triangular filters on the HTK mel scale.
class MelFilterbank {
 public:
  MelFilterbank(int sample_rate, std::size_t fft_size, std::size_t bands, double fmin_hz,
                double fmax_hz);

  std::size_t bands() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  /// power: T x bins. Returns T x bands.
  MatrixRM apply(const MatrixRM& power) const;

 private:
  MatrixRM weights_;  // bands x bins
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Orthonormal DCT-II along each row, keeping coefficients [first, first + count).
MatrixRM dct_rows(const MatrixRM& input, std::size_t first, std::size_t count);

}  // namespace emobridge::audio

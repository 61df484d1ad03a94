#include "emobridge/audio/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "emobridge/error.hpp"

namespace emobridge::audio {

namespace {

constexpr long kZeroCrossings = 16;
constexpr double kRolloff = 0.95;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double arg = std::numbers::pi * x;
  return std::sin(arg) / arg;
}

}  // namespace

Waveform resample(const Waveform& input, int target_rate) {
  if (input.sample_rate <= 0 || target_rate <= 0) {
    throw InvalidInput("resample: sample rates must be positive");
  }
  if (input.sample_rate == target_rate) return input;

  const long divisor = std::gcd(input.sample_rate, target_rate);
  const long up = target_rate / divisor;
  const long down = input.sample_rate / divisor;
  const long factor = std::max(up, down);

  // Prototype filter at the upsampled rate, cutoff in cycles/sample.
  const double cutoff = 0.5 * kRolloff / static_cast<double>(factor);
  const long half = kZeroCrossings * factor;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (long n = -half; n <= half; ++n) {
    const double phase = static_cast<double>(n + half) / static_cast<double>(2 * half);
    const double window = 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * phase) +
                          0.08 * std::cos(4.0 * std::numbers::pi * phase);
    taps[static_cast<std::size_t>(n + half)] =
        static_cast<double>(up) * 2.0 * cutoff * sinc(2.0 * cutoff * static_cast<double>(n)) * window;
  }

  const long in_len = static_cast<long>(input.samples.size());
  const long out_len = (in_len * up + down - 1) / down;
  Waveform output;
  output.sample_rate = target_rate;
  output.samples.assign(static_cast<std::size_t>(out_len), 0.0);
  for (long m = 0; m < out_len; ++m) {
    const long centre = m * down;
    long k_lo = (centre - half + up - 1) / up;
    if (centre - half < 0) k_lo = -((half - centre) / up);
    const long k_hi = (centre + half) / up;
    double acc = 0.0;
    for (long k = std::max(k_lo, 0L); k <= std::min(k_hi, in_len - 1); ++k) {
      acc += input.samples[static_cast<std::size_t>(k)] *
             taps[static_cast<std::size_t>(centre - k * up + half)];
    }
    output.samples[static_cast<std::size_t>(m)] = acc;
  }
  return output;
}

Waveform read_wav_at(const std::string& path, int target_rate) {
  Waveform wave = read_wav(path);
  if (wave.sample_rate == target_rate) return wave;
  return resample(wave, target_rate);
}

}  // namespace emobridge::audio

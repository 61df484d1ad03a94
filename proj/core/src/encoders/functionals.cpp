#include "emobridge/encoders/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "emobridge/audio/spectral.hpp"
#include "emobridge/binary_io.hpp"
#include "emobridge/error.hpp"

namespace emobridge::encoders {

namespace {

constexpr const char* kBaseDescriptors[] = {"log_energy", "zcr", "spectral_centroid", "spectral_flux", "pitch"};
constexpr const char* kEgemapsFunctionals[] = {"mean", "std", "p10", "p90"};
constexpr const char* kIs09Functionals[] = {"mean", "std", "min", "max", "range", "slope"};
constexpr std::size_t kCepstra = 12;
constexpr std::size_t kCepstralBands = 26;
constexpr std::size_t kPitchIndex = 4;
constexpr double kMinPitchHz = 60.0;
constexpr double kMaxPitchHz = 500.0;
constexpr double kVoicingThreshold = 0.45;

// Linear-interpolation percentile on sorted data.
double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Least-squares slope against time in seconds.
double slope_of(const std::vector<double>& v, const std::vector<double>& times) {
  if (v.size() < 2) return 0.0;
  const double mt = mean_of(times);
  const double mv = mean_of(v);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    num += (times[i] - mt) * (v[i] - mv);
    den += (times[i] - mt) * (times[i] - mt);
  }
  return den > 0.0 ? num / den : 0.0;
}

double frame_pitch(std::span<const double> frame, int sample_rate) {
  const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / static_cast<double>(frame.size());
  std::vector<double> x(frame.begin(), frame.end());
  for (double& v : x) v -= mean;
  double r0 = 0.0;
  for (double v : x) r0 += v * v;
  if (r0 <= 1e-10) return 0.0;
  const auto min_lag = static_cast<std::size_t>(std::floor(sample_rate / kMaxPitchHz));
  const auto max_lag = std::min(static_cast<std::size_t>(std::ceil(sample_rate / kMinPitchHz)), x.size() - 1);
  double best = 0.0;
  std::size_t best_lag = 0;
  std::vector<double> r(max_lag + 2, 0.0);
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) acc += x[i] * x[i + lag];
    // Unbiased normalisation so long lags are not penalised.
    r[lag] = acc / r0 * static_cast<double>(x.size()) / static_cast<double>(x.size() - lag);
    if (r[lag] > best) {
      best = r[lag];
      best_lag = lag;
    }
  }
  if (best < kVoicingThreshold || best_lag == 0) return 0.0;
  // Periodic signals peak at every multiple of the period; take the first
  // local maximum close to the global one to avoid sub-octave errors.
  for (std::size_t lag = min_lag + 1; lag < best_lag; ++lag) {
    if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
      best_lag = lag;
      break;
    }
  }
  double lag = static_cast<double>(best_lag);
  if (best_lag > min_lag && best_lag < max_lag) {
    const double a = r[best_lag - 1], b = r[best_lag], c = r[best_lag + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) lag += 0.5 * (a - c) / denom;
  }
  return static_cast<double>(sample_rate) / lag;
}

struct Descriptors {
  std::vector<std::vector<double>> tracks;  // descriptor -> per-frame values
  std::vector<double> times;
};

Descriptors low_level_descriptors(const audio::Waveform& waveform, bool with_cepstra) {
  const auto spec = audio::FrameSpec::from_durations(waveform.sample_rate, 0.025, 0.010);
  const std::size_t frames = audio::frame_count(waveform.samples.size(), spec);
  if (frames < 3) throw InvalidInput("extract_functionals: waveform shorter than 3 frames");

  const MatrixRM power = audio::power_spectrogram(waveform.samples, spec);
  const double bin_hz = static_cast<double>(waveform.sample_rate) / static_cast<double>(spec.fft_size);

  Descriptors d;
  d.tracks.assign(5 + (with_cepstra ? kCepstra : 0), std::vector<double>(frames, 0.0));
  d.times.resize(frames);
  const std::span<const double> samples(waveform.samples);
  Eigen::RowVectorXd previous;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto frame = samples.subspan(t * spec.hop, spec.window);
    d.times[t] = static_cast<double>(t * spec.hop) / waveform.sample_rate;

    double energy = 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      energy += frame[i] * frame[i];
      if (i > 0 && (frame[i] >= 0.0) != (frame[i - 1] >= 0.0)) ++crossings;
    }
    d.tracks[0][t] = std::log1p(energy);
    d.tracks[1][t] = static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);

    const auto row = power.row(static_cast<Eigen::Index>(t));
    const double total = row.sum();
    double centroid = 0.0;
    Eigen::RowVectorXd normalised = Eigen::RowVectorXd::Zero(row.size());
    if (total > 0.0) {
      for (Eigen::Index k = 0; k < row.size(); ++k) centroid += static_cast<double>(k) * bin_hz * row(k);
      centroid /= total;
      normalised = row / total;
    }
    d.tracks[2][t] = centroid;
    d.tracks[3][t] = t == 0 ? 0.0 : (normalised - previous).squaredNorm();
    previous = normalised;
    d.tracks[kPitchIndex][t] = frame_pitch(frame, waveform.sample_rate);
  }

  if (with_cepstra) {
    const audio::MelFilterbank bank(waveform.sample_rate, spec.fft_size, kCepstralBands, 20.0,
                                    0.5 * waveform.sample_rate);
    const MatrixRM log_mel = (bank.apply(power).array() + 1e-10).log().matrix();
    const MatrixRM ceps = audio::dct_rows(log_mel, 1, kCepstra);
    for (std::size_t c = 0; c < kCepstra; ++c) {
      for (std::size_t t = 0; t < frames; ++t) {
        d.tracks[5 + c][t] = ceps(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
      }
    }
  }
  return d;
}

}  // namespace

std::string_view to_string(FunctionalSet set) {
  switch (set) {
    case FunctionalSet::EGEMAPS_LIKE: return "EGEMAPS_LIKE";
    case FunctionalSet::IS09_LIKE: return "IS09_LIKE";
    case FunctionalSet::EXTERNAL: return "EXTERNAL";
  }
  throw InvalidInput("unknown functional set");
}

FunctionalSet parse_functional_set(std::string_view name) {
  for (auto set : {FunctionalSet::EGEMAPS_LIKE, FunctionalSet::IS09_LIKE, FunctionalSet::EXTERNAL}) {
    if (to_string(set) == name) return set;
  }
  throw InvalidInput("unknown functional set '" + std::string(name) + "'");
}

std::size_t functional_length(FunctionalSet set) {
  switch (set) {
    case FunctionalSet::EGEMAPS_LIKE: return 5 * std::size(kEgemapsFunctionals);
    case FunctionalSet::IS09_LIKE: return (5 + kCepstra) * std::size(kIs09Functionals);
    case FunctionalSet::EXTERNAL: break;
  }
  throw InvalidInput("EXTERNAL functional vectors have no built-in length");
}

std::vector<std::string> functional_names(FunctionalSet set) {
  std::vector<std::string> descriptors(std::begin(kBaseDescriptors), std::end(kBaseDescriptors));
  std::vector<std::string> functionals;
  if (set == FunctionalSet::EGEMAPS_LIKE) {
    functionals.assign(std::begin(kEgemapsFunctionals), std::end(kEgemapsFunctionals));
  } else if (set == FunctionalSet::IS09_LIKE) {
    for (std::size_t c = 1; c <= kCepstra; ++c) descriptors.push_back("mfcc" + std::to_string(c));
    functionals.assign(std::begin(kIs09Functionals), std::end(kIs09Functionals));
  } else {
    throw InvalidInput("EXTERNAL functional vectors have no built-in names");
  }
  std::vector<std::string> names;
  for (const auto& d : descriptors) {
    for (const auto& f : functionals) names.push_back(d + "_" + f);
  }
  return names;
}

FunctionalVector extract_functionals(const audio::Waveform& waveform, FunctionalSet set) {
  if (set == FunctionalSet::EXTERNAL) {
    throw InvalidInput("EXTERNAL functionals are read with read_external_functionals");
  }
  if (waveform.sample_rate <= 0) throw InvalidInput("extract_functionals: invalid sample rate");
  const bool is09 = set == FunctionalSet::IS09_LIKE;
  const Descriptors d = low_level_descriptors(waveform, is09);

  FunctionalVector out;
  out.set = set;
  out.names = functional_names(set);
  const std::size_t per_descriptor = is09 ? std::size(kIs09Functionals) : std::size(kEgemapsFunctionals);
  for (std::size_t i = 0; i < d.tracks.size(); ++i) {
    std::vector<double> values = d.tracks[i];
    std::vector<double> times = d.times;
    if (i == kPitchIndex) {
      std::vector<double> voiced, voiced_times;
      for (std::size_t t = 0; t < values.size(); ++t) {
        if (values[t] > 0.0) {
          voiced.push_back(values[t]);
          voiced_times.push_back(times[t]);
        }
      }
      if (voiced.empty()) {
        out.values.insert(out.values.end(), per_descriptor, kUnvoicedPitch);
        continue;
      }
      values = std::move(voiced);
      times = std::move(voiced_times);
    }
    if (is09) {
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      out.values.insert(out.values.end(),
                        {mean_of(values), std_of(values), *lo, *hi, *hi - *lo, slope_of(values, times)});
    } else {
      out.values.insert(out.values.end(),
                        {mean_of(values), std_of(values), percentile(values, 0.1), percentile(values, 0.9)});
    }
  }
  for (double v : out.values) {
    if (!std::isfinite(v)) throw NumericalError("extract_functionals: non-finite descriptor");
  }
  return out;
}

FunctionalVector read_external_functionals(const std::string& path, std::size_t expected_length) {
  const std::string bytes = binary::read_file(path);
  std::istringstream in(bytes);
  const auto length = binary::read_le<std::uint32_t>(in, "functional length prefix");
  if (length != expected_length) {
    throw FormatError(path + ": functional vector has length " + std::to_string(length) + ", expected " +
                      std::to_string(expected_length));
  }
  if (bytes.size() != 4 + 4 * static_cast<std::size_t>(length)) {
    throw FormatError(path + ": file size does not match its length prefix");
  }
  FunctionalVector out;
  out.set = FunctionalSet::EXTERNAL;
  for (std::uint32_t i = 0; i < length; ++i) {
    out.values.push_back(binary::read_le<float>(in, "functional value"));
    out.names.push_back("external_" + std::to_string(i));
  }
  return out;
}

void write_external_functionals(const std::string& path, std::span<const float> values) {
  std::ostringstream out;
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.size()));
  for (float v : values) binary::write_le<float>(out, v);
  binary::write_file_atomically(path, out.str());
}

LayerFeatureSet as_single_layer(const std::string& utterance_id, const FunctionalVector& vector) {
  LayerFeatureSet out;
  out.utterance_id = utterance_id;
  MatrixF row(1, static_cast<Eigen::Index>(vector.values.size()));
  for (std::size_t i = 0; i < vector.values.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = static_cast<float>(vector.values[i]);
  out.layers.push_back(std::move(row));
  return out;
}

}  // namespace emobridge::encoders

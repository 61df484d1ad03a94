#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "emobridge/audio/wav.hpp"
#include "emobridge/metrics/eer.hpp"
#include "emobridge/rng.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 salt(std::random_device{}());
    path_ = fs::temp_directory_path() / ("emobridge_" + tag + "_" + std::to_string(salt()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

// Quadratic-time EER: every candidate threshold is scored from scratch, the
// crossing is located on the (FAR, FRR) polyline by direct search.
inline double brute_force_eer(const emobridge::metrics::ScoredSet& set) {
  using emobridge::corpus::SpoofLabel;
  std::vector<double> thresholds = set.scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::vector<double> far, frr;
  for (double t : thresholds) {
    double fa = 0, fr = 0, bona = 0, spoof = 0;
    for (std::size_t i = 0; i < set.scores.size(); ++i) {
      const bool called_spoof = set.scores[i] >= t;
      if (set.labels[i] == SpoofLabel::spoof) {
        ++spoof;
        if (!called_spoof) ++fr;
      } else {
        ++bona;
        if (called_spoof) ++fa;
      }
    }
    far.push_back(fa / bona);
    frr.push_back(fr / spoof);
  }
  for (std::size_t i = 0; i < far.size(); ++i) {
    if (far[i] == frr[i]) return far[i];
  }
  for (std::size_t i = 0; i + 1 < far.size(); ++i) {
    const double d0 = far[i] - frr[i];
    const double d1 = far[i + 1] - frr[i + 1];
    if (d0 > 0 && d1 < 0) {
      const double s = d0 / (d0 - d1);
      return far[i] + s * (far[i + 1] - far[i]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline emobridge::audio::Waveform sine(double hz, double seconds, int rate = 16000, double amplitude = 0.5) {
  emobridge::audio::Waveform w;
  w.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amplitude * std::sin(2.0 * 3.14159265358979323846 * hz * static_cast<double>(i) / rate);
  }
  return w;
}

inline emobridge::audio::Waveform noise(double seconds, std::uint64_t seed, int rate = 16000) {
  emobridge::Rng rng(seed);
  emobridge::audio::Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (auto& x : w.samples) x = 0.1 * rng.normal();
  return w;
}

}  // namespace testing_support

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emobridge/audio/wav.hpp"
#include "emobridge/encoders/parameters.hpp"
#include "emobridge/matrix.hpp"

namespace emobridge::encoders {

/// The role an encoder plays in a comparison. Desk-scale runs use the toy
/// architecture for every kind; real checkpoints enter through adapters.
enum class EncoderKind { ASR, SV, DL_RAW, EMOTION_PRETRAINED, TOY };
std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct ToyEncoderConfig {
  std::size_t layers = 4;
  std::size_t dim = 16;
  std::uint64_t seed = 1;
  int sample_rate = 16000;
  std::size_t mel_bands = 32;
  std::size_t ff_width = 32;
  std::size_t pretrain_classes = 8;
  double positional_scale = 0.5;
  // Zero query/key projections: every attention row is exactly 1/T.
  bool uniform_attention = false;
};

/// Hidden states of every encoder layer for one utterance.
struct LayerFeatureSet {
  std::string utterance_id;
  std::vector<MatrixF> layers;  // L matrices, T_l x D
  // Mean attention per key position, one vector per layer (empty when not exposed).
  std::vector<std::vector<double>> attention_profiles;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t feature_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().cols()); }
  /// Throws NumericalError naming the first layer with a non-finite entry and
  /// InvalidInput when layer widths disagree.
  void validate() const;
};

/// Layered encoder parameters theta plus the frozen original-task head omega.
/// omega is only reachable through const access; its construction checksum is
/// kept so any later mutation is detectable.
class EncoderBundle {
 public:
  EncoderBundle(EncoderKind kind, ToyEncoderConfig config, ParameterSet theta, ParameterSet omega);

  EncoderKind kind() const noexcept { return kind_; }
  const ToyEncoderConfig& config() const noexcept { return config_; }
  std::size_t layer_count() const noexcept { return config_.layers; }
  std::size_t feature_dim() const noexcept { return config_.dim; }
  bool exposes_attention() const noexcept { return true; }
  int sample_rate() const noexcept { return config_.sample_rate; }

  ParameterSet& theta() noexcept { return theta_; }
  const ParameterSet& theta() const noexcept { return theta_; }
  const ParameterSet& omega() const noexcept { return omega_; }

  std::string theta_checksum() const { return theta_.checksum(); }
  std::string omega_checksum() const { return omega_.checksum(); }
  const std::string& omega_reference_checksum() const noexcept { return omega_reference_; }
  /// Throws Error if omega differs from its construction-time checksum.
  void verify_frozen_head() const;

 private:
  EncoderKind kind_;
  ToyEncoderConfig config_;
  ParameterSet theta_;
  ParameterSet omega_;
  std::string omega_reference_;
};

/// Randomly initialised toy encoder. Requires layers >= 2 and dim >= 4.
EncoderBundle build_toy_encoder(const ToyEncoderConfig& config, EncoderKind kind = EncoderKind::TOY);

/// Runs the encoder on one waveform. The sample rate must equal the bundle's.
LayerFeatureSet extract_layers(const EncoderBundle& bundle, const audio::Waveform& waveform,
                               const std::string& utterance_id = {});

/// Raw per-layer attention matrices (T x T, rows sum to one).
std::vector<MatrixRM> attention_maps(const EncoderBundle& bundle, const audio::Waveform& waveform);

/// Checkpoint with groups "theta" and "omega" plus a JSON sidecar (<path>.json)
/// holding the kind and architecture.
void save_bundle(const std::string& path, const EncoderBundle& bundle);
EncoderBundle load_bundle(const std::string& path);

/// Common surface for anything that produces per-layer features.
class LayerExtractor {
 public:
  virtual ~LayerExtractor() = default;
  virtual std::size_t layer_count() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual int sample_rate() const = 0;
  virtual LayerFeatureSet extract(const std::string& utterance_id, const audio::Waveform& waveform) const = 0;
};

class ToyExtractor final : public LayerExtractor {
 public:
  explicit ToyExtractor(const EncoderBundle& bundle) : bundle_(bundle) {}
  std::size_t layer_count() const override { return bundle_.layer_count(); }
  std::size_t feature_dim() const override { return bundle_.feature_dim(); }
  int sample_rate() const override { return bundle_.sample_rate(); }
  LayerFeatureSet extract(const std::string& utterance_id, const audio::Waveform& waveform) const override {
    return extract_layers(bundle_, waveform, utterance_id);
  }

 private:
  const EncoderBundle& bundle_;
};

}  // namespace emobridge::encoders

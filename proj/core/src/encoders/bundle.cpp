#include "emobridge/encoders/bundle.hpp"

#include <json.hpp>

#include <cmath>

#include "emobridge/binary_io.hpp"
#include "emobridge/encoders/toy_encoder.hpp"
#include "emobridge/error.hpp"

namespace emobridge::encoders {

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::ASR: return "ASR";
    case EncoderKind::SV: return "SV";
    case EncoderKind::DL_RAW: return "DL_RAW";
    case EncoderKind::EMOTION_PRETRAINED: return "EMOTION_PRETRAINED";
    case EncoderKind::TOY: return "TOY";
  }
  throw InvalidInput("unknown encoder kind");
}

EncoderKind parse_encoder_kind(std::string_view name) {
  for (auto kind : {EncoderKind::ASR, EncoderKind::SV, EncoderKind::DL_RAW,
                    EncoderKind::EMOTION_PRETRAINED, EncoderKind::TOY}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidInput("unknown encoder kind '" + std::string(name) + "'");
}

void LayerFeatureSet::validate() const {
  if (layers.empty()) throw InvalidInput("feature set '" + utterance_id + "' has no layers");
  const auto dim = layers.front().cols();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].cols() != dim) {
      throw InvalidInput("feature set '" + utterance_id + "': layer " + std::to_string(l) + " width differs");
    }
    if (!layers[l].allFinite()) {
      throw NumericalError("feature set '" + utterance_id + "': non-finite value in layer " + std::to_string(l));
    }
  }
}

EncoderBundle::EncoderBundle(EncoderKind kind, ToyEncoderConfig config, ParameterSet theta, ParameterSet omega)
    : kind_(kind), config_(config), theta_(std::move(theta)), omega_(std::move(omega)) {
  omega_reference_ = omega_.checksum();
}

void EncoderBundle::verify_frozen_head() const {
  if (omega_.checksum() != omega_reference_) {
    throw Error("frozen original-task head was modified");
  }
}

EncoderBundle build_toy_encoder(const ToyEncoderConfig& config, EncoderKind kind) {
  if (config.layers < 2 || config.dim < 4) {
    throw InvalidInput("toy encoder needs layers >= 2 and dim >= 4");
  }
  if (config.mel_bands == 0 || config.ff_width == 0 || config.pretrain_classes == 0 || config.sample_rate <= 0) {
    throw InvalidInput("toy encoder: mel_bands, ff_width, pretrain_classes and sample_rate must be positive");
  }
  Rng rng(config.seed);
  Rng theta_rng = rng.fork(1);
  Rng omega_rng = rng.fork(2);
  ParameterSet theta = toy::init_theta(config, theta_rng);
  ParameterSet omega = toy::init_omega(config, omega_rng);
  return EncoderBundle(kind, config, std::move(theta), std::move(omega));
}

namespace {

MatrixRM checked_frontend(const EncoderBundle& bundle, const audio::Waveform& waveform) {
  if (waveform.samples.empty()) throw InvalidInput("extract_layers: empty waveform");
  if (waveform.sample_rate != bundle.sample_rate()) {
    throw InvalidInput("extract_layers: sample rate " + std::to_string(waveform.sample_rate) +
                       " does not match encoder rate " + std::to_string(bundle.sample_rate()));
  }
  MatrixRM features = toy::frontend(waveform, bundle.config());
  if (features.rows() == 0) throw InvalidInput("extract_layers: waveform shorter than one frame");
  return features;
}

}  // namespace

LayerFeatureSet extract_layers(const EncoderBundle& bundle, const audio::Waveform& waveform,
                               const std::string& utterance_id) {
  const MatrixRM features = checked_frontend(bundle, waveform);
  const toy::Forward pass = toy::forward(bundle.theta(), bundle.config(), features);
  LayerFeatureSet out;
  out.utterance_id = utterance_id;
  for (std::size_t l = 0; l < pass.layers.size(); ++l) {
    const auto& cache = pass.layers[l];
    if (!cache.output.allFinite()) {
      throw NumericalError("extract_layers: non-finite output in layer " + std::to_string(l));
    }
    out.layers.push_back(cache.output.cast<float>());
    // Mean over query rows; the running mean keeps constant columns exact.
    std::vector<double> profile(static_cast<std::size_t>(cache.attention.cols()), 0.0);
    for (Eigen::Index q = 0; q < cache.attention.rows(); ++q) {
      for (Eigen::Index k = 0; k < cache.attention.cols(); ++k) {
        auto& m = profile[static_cast<std::size_t>(k)];
        m += (cache.attention(q, k) - m) / static_cast<double>(q + 1);
      }
    }
    out.attention_profiles.push_back(std::move(profile));
  }
  return out;
}

std::vector<MatrixRM> attention_maps(const EncoderBundle& bundle, const audio::Waveform& waveform) {
  const MatrixRM features = checked_frontend(bundle, waveform);
  toy::Forward pass = toy::forward(bundle.theta(), bundle.config(), features);
  std::vector<MatrixRM> maps;
  for (auto& layer : pass.layers) maps.push_back(std::move(layer.attention));
  return maps;
}

void save_bundle(const std::string& path, const EncoderBundle& bundle) {
  write_checkpoint(path, {{"theta", &bundle.theta()}, {"omega", &bundle.omega()}});
  const auto& c = bundle.config();
  nlohmann::json meta = {
      {"kind", to_string(bundle.kind())},
      {"layers", c.layers},
      {"dim", c.dim},
      {"seed", c.seed},
      {"sample_rate", c.sample_rate},
      {"mel_bands", c.mel_bands},
      {"ff_width", c.ff_width},
      {"pretrain_classes", c.pretrain_classes},
      {"positional_scale", c.positional_scale},
      {"uniform_attention", c.uniform_attention},
      {"omega_checksum", bundle.omega_reference_checksum()},
  };
  binary::write_file_atomically(path + ".json", meta.dump(2) + "\n");
}

EncoderBundle load_bundle(const std::string& path) {
  auto groups = read_checkpoint(path);
  if (groups.count("theta") == 0 || groups.count("omega") == 0) {
    throw FormatError(path + ": bundle checkpoint needs theta and omega groups");
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(binary::read_file(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ".json: " + e.what());
  }
  ToyEncoderConfig c;
  c.layers = meta.at("layers").get<std::size_t>();
  c.dim = meta.at("dim").get<std::size_t>();
  c.seed = meta.at("seed").get<std::uint64_t>();
  c.sample_rate = meta.at("sample_rate").get<int>();
  c.mel_bands = meta.at("mel_bands").get<std::size_t>();
  c.ff_width = meta.at("ff_width").get<std::size_t>();
  c.pretrain_classes = meta.at("pretrain_classes").get<std::size_t>();
  c.positional_scale = meta.at("positional_scale").get<double>();
  c.uniform_attention = meta.at("uniform_attention").get<bool>();
  EncoderBundle bundle(parse_encoder_kind(meta.at("kind").get<std::string>()), c,
                       std::move(groups.at("theta")), std::move(groups.at("omega")));
  if (bundle.omega_reference_checksum() != meta.at("omega_checksum").get<std::string>()) {
    throw FormatError(path + ": omega checksum does not match the recorded value");
  }
  return bundle;
}

}  // namespace emobridge::encoders

#include "emobridge/encoders/toy_encoder.hpp"

#include <cmath>
#include <string>

#include "emobridge/error.hpp"

namespace emobridge::encoders::toy {

namespace {

constexpr double kLogFloor = 1e-8;
constexpr double kLogOffset = 2.0;
constexpr double kLogScale = 4.0;
constexpr double kMelLowHz = 60.0;
constexpr double kMelHighHz = 4000.0;

std::string layer_name(std::size_t layer, const char* part) {
  return "layer" + std::to_string(layer) + "." + part;
}

void fill_normal(Tensor& t, double stddev, Rng& rng) {
  for (double& v : t.values) v = stddev * rng.normal();
}

MatrixRM positional_encoding(Eigen::Index frames, Eigen::Index dim, double scale) {
  MatrixRM pe(frames, dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * rate;
      pe(t, i) = scale * ((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

void softmax_rows(MatrixRM& scores) {
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    const double peak = row.maxCoeff();
    row = (row.array() - peak).exp();
    row /= row.sum();
  }
}

}  // namespace

audio::FrameSpec frame_spec(int sample_rate) { return audio::FrameSpec::from_durations(sample_rate, 0.025, 0.020); }

std::size_t frame_count(std::size_t num_samples, int sample_rate) {
  return audio::frame_count(num_samples, frame_spec(sample_rate));
}

MatrixRM frontend(const audio::Waveform& waveform, const ToyEncoderConfig& config) {
  const audio::FrameSpec spec = frame_spec(config.sample_rate);
  const MatrixRM power = audio::power_spectrogram(waveform.samples, spec);
  const double high = std::min(kMelHighHz, 0.5 * config.sample_rate);
  const audio::MelFilterbank bank(config.sample_rate, spec.fft_size, config.mel_bands, kMelLowHz, high);
  MatrixRM mel = bank.apply(power);
  return (((mel.array() + kLogFloor).log() - kLogOffset) / kLogScale).matrix();
}

ParameterSet init_theta(const ToyEncoderConfig& config, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(config.dim);
  const auto f = static_cast<Eigen::Index>(config.ff_width);
  const auto b = static_cast<Eigen::Index>(config.mel_bands);
  ParameterSet theta;
  fill_normal(theta.add("in.weight", d, b), 1.0 / std::sqrt(static_cast<double>(b)), rng);
  theta.add("in.bias", 1, d);
  for (std::size_t l = 0; l < config.layers; ++l) {
    Tensor& wq = theta.add(layer_name(l, "wq"), d, d);
    Tensor& wk = theta.add(layer_name(l, "wk"), d, d);
    if (!config.uniform_attention) {
      fill_normal(wq, 1.0 / std::sqrt(static_cast<double>(d)), rng);
      fill_normal(wk, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    }
    fill_normal(theta.add(layer_name(l, "wv"), d, d), 0.5 / std::sqrt(static_cast<double>(d)), rng);
    fill_normal(theta.add(layer_name(l, "ff1.weight"), f, d), 1.0 / std::sqrt(static_cast<double>(d)), rng);
    theta.add(layer_name(l, "ff1.bias"), 1, f);
    fill_normal(theta.add(layer_name(l, "ff2.weight"), d, f), 0.5 / std::sqrt(static_cast<double>(f)), rng);
    theta.add(layer_name(l, "ff2.bias"), 1, d);
  }
  return theta;
}

ParameterSet init_omega(const ToyEncoderConfig& config, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(config.dim);
  const auto p = static_cast<Eigen::Index>(config.pretrain_classes);
  ParameterSet omega;
  fill_normal(omega.add("pretrain_head.weight", p, d), 1.0 / std::sqrt(static_cast<double>(d)), rng);
  fill_normal(omega.add("pretrain_head.bias", 1, p), 0.1, rng);
  return omega;
}

Forward forward(const ParameterSet& theta, const ToyEncoderConfig& config, const MatrixRM& features) {
  if (features.rows() == 0) throw InvalidInput("toy encoder: no frames");
  if (features.cols() != static_cast<Eigen::Index>(config.mel_bands)) {
    throw InvalidInput("toy encoder: front-end width mismatch");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config.dim));
  Forward out;
  out.embedded = features * theta.at("in.weight").matrix().transpose();
  out.embedded.rowwise() += theta.at("in.bias").row();
  out.embedded += positional_encoding(features.rows(), static_cast<Eigen::Index>(config.dim),
                                      config.positional_scale);

  out.layers.resize(config.layers);
  const MatrixRM* input = &out.embedded;
  for (std::size_t l = 0; l < config.layers; ++l) {
    LayerCache& c = out.layers[l];
    const MatrixRM& h = *input;
    c.q = h * theta.at(layer_name(l, "wq")).matrix().transpose();
    c.k = h * theta.at(layer_name(l, "wk")).matrix().transpose();
    c.v = h * theta.at(layer_name(l, "wv")).matrix().transpose();
    c.attention = c.q * c.k.transpose() * inv_sqrt_d;
    softmax_rows(c.attention);
    c.z = h + c.attention * c.v;
    MatrixRM pre = c.z * theta.at(layer_name(l, "ff1.weight")).matrix().transpose();
    pre.rowwise() += theta.at(layer_name(l, "ff1.bias")).row();
    c.activation = pre.array().tanh().matrix();
    c.output = c.z + c.activation * theta.at(layer_name(l, "ff2.weight")).matrix().transpose();
    c.output.rowwise() += theta.at(layer_name(l, "ff2.bias")).row();
    input = &c.output;
  }
  return out;
}

void backward(const ParameterSet& theta, const ToyEncoderConfig& config, const MatrixRM& features,
              const Forward& cache, const MatrixRM& grad_output, ParameterSet& grad) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config.dim));
  MatrixRM g = grad_output;
  for (std::size_t li = config.layers; li-- > 0;) {
    const LayerCache& c = cache.layers[li];
    const MatrixRM& h = li == 0 ? cache.embedded : cache.layers[li - 1].output;

    const auto w2 = theta.at(layer_name(li, "ff2.weight")).matrix();
    const auto w1 = theta.at(layer_name(li, "ff1.weight")).matrix();
    grad.at(layer_name(li, "ff2.weight")).matrix() += g.transpose() * c.activation;
    grad.at(layer_name(li, "ff2.bias")).row() += g.colwise().sum();
    const MatrixRM d_pre = ((g * w2).array() * (1.0 - c.activation.array().square())).matrix();
    grad.at(layer_name(li, "ff1.weight")).matrix() += d_pre.transpose() * c.z;
    grad.at(layer_name(li, "ff1.bias")).row() += d_pre.colwise().sum();
    const MatrixRM d_z = g + d_pre * w1;

    const MatrixRM d_attention = d_z * c.v.transpose();
    const MatrixRM d_v = c.attention.transpose() * d_z;
    const Eigen::VectorXd row_dot = (d_attention.array() * c.attention.array()).rowwise().sum();
    MatrixRM d_scores = (c.attention.array() * (d_attention.colwise() - row_dot).array()).matrix();
    d_scores *= inv_sqrt_d;
    const MatrixRM d_q = d_scores * c.k;
    const MatrixRM d_k = d_scores.transpose() * c.q;

    const auto wq = theta.at(layer_name(li, "wq")).matrix();
    const auto wk = theta.at(layer_name(li, "wk")).matrix();
    const auto wv = theta.at(layer_name(li, "wv")).matrix();
    grad.at(layer_name(li, "wq")).matrix() += d_q.transpose() * h;
    grad.at(layer_name(li, "wk")).matrix() += d_k.transpose() * h;
    grad.at(layer_name(li, "wv")).matrix() += d_v.transpose() * h;
    g = d_z + d_q * wq + d_k * wk + d_v * wv;
  }
  grad.at("in.weight").matrix() += g.transpose() * features;
  grad.at("in.bias").row() += g.colwise().sum();
}

}  // namespace emobridge::encoders::toy

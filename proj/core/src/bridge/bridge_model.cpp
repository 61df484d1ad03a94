#include "emobridge/bridge/bridge_model.hpp"

#include <cmath>

#include "emobridge/bridge/emotion_head.hpp"
#include "emobridge/encoders/toy_encoder.hpp"
#include "emobridge/error.hpp"

namespace emobridge::bridge {

namespace {

std::size_t class_index(corpus::Emotion label) {
  const auto index = static_cast<std::size_t>(label);
  if (index >= corpus::kEmotionCount) {
    throw InvalidInput("emotion label " + std::to_string(index) + " is outside the 7-class space");
  }
  return index;
}

VectorD pooled_last(const encoders::toy::Forward& fwd) {
  return probe::pool_layer(fwd.layers.back().output);
}

}  // namespace

EmotionExample make_example(const encoders::EncoderBundle& bundle, std::string id,
                            const audio::Waveform& waveform, corpus::Emotion label) {
  if (waveform.sample_rate != bundle.sample_rate()) {
    throw InvalidInput("'" + id + "': sample rate " + std::to_string(waveform.sample_rate) +
                       " differs from encoder rate " + std::to_string(bundle.sample_rate()));
  }
  return {std::move(id), encoders::toy::frontend(waveform, bundle.config()), label};
}

BridgeModel::BridgeModel(encoders::EncoderBundle bundle, encoders::ParameterSet head, probe::PoolingRule pooling)
    : bundle_(std::move(bundle)), head_(std::move(head)), pooling_(pooling) {
  const auto& w1 = head_.at("fc1.weight");
  if (static_cast<std::size_t>(w1.cols) != bundle_.feature_dim()) {
    throw InvalidInput("emotion head input width " + std::to_string(w1.cols) + " does not match encoder width " +
                       std::to_string(bundle_.feature_dim()));
  }
}

VectorD BridgeModel::logits(const MatrixRM& frontend_features) const {
  const auto fwd = encoders::toy::forward(bundle_.theta(), bundle_.config(), frontend_features);
  return head_forward(head_, pooled_last(fwd)).logits;
}

VectorD BridgeModel::logits(const audio::Waveform& waveform) const {
  return logits(encoders::toy::frontend(waveform, bundle_.config()));
}

corpus::Emotion BridgeModel::predict(const MatrixRM& frontend_features) const {
  const VectorD z = logits(frontend_features);
  Eigen::Index best = 0;
  z.maxCoeff(&best);
  return corpus::kAllEmotions[static_cast<std::size_t>(best)];
}

BridgeModel attach_head(encoders::EncoderBundle bundle, const probe::PoolingRule& pooling, std::uint64_t seed) {
  if (bundle.feature_dim() == 0) throw InvalidInput("attach_head: encoder feature width unknown");
  Rng rng(mix_seed(seed ^ 0x68656164ULL));
  auto head = make_emotion_head(static_cast<Eigen::Index>(bundle.feature_dim()), rng);
  return BridgeModel(std::move(bundle), std::move(head), pooling);
}

LossAndGrad emotion_loss(const BridgeModel& model, std::span<const EmotionExample> batch) {
  if (batch.empty()) throw InvalidInput("emotion_loss: empty batch");
  const auto& theta = model.bundle().theta();
  const auto& config = model.bundle().config();
  LossAndGrad out{0.0, theta.zeros_like(), model.head().zeros_like()};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& example : batch) {
    const std::size_t label = class_index(example.label);
    const auto fwd = encoders::toy::forward(theta, config, example.features);
    const auto head = head_forward(model.head(), pooled_last(fwd));
    out.loss += cross_entropy(head.logits, label) * scale;

    VectorD grad_logits = softmax(head.logits);
    grad_logits(static_cast<Eigen::Index>(label)) -= 1.0;
    grad_logits *= scale;
    const VectorD grad_pooled = head_backward(model.head(), head, grad_logits, out.grad_head);

    const MatrixRM& last = fwd.layers.back().output;
    MatrixRM grad_last = grad_pooled.transpose().replicate(last.rows(), 1) / static_cast<double>(last.rows());
    encoders::toy::backward(theta, config, example.features, fwd, grad_last, out.grad_theta);
  }
  return out;
}

double emotion_loss_value(const BridgeModel& model, std::span<const EmotionExample> batch) {
  if (batch.empty()) throw InvalidInput("emotion_loss: empty batch");
  double loss = 0.0;
  for (const auto& example : batch) loss += cross_entropy(model.logits(example.features), class_index(example.label));
  return loss / static_cast<double>(batch.size());
}

}  // namespace emobridge::bridge

#pragma once

#include <span>
#include <string>
#include <vector>

#include "emobridge/audio/wav.hpp"
#include "emobridge/corpus/labels.hpp"
#include "emobridge/encoders/bundle.hpp"
#include "emobridge/probe/pooling.hpp"

namespace emobridge::bridge {

/// One emotion-labelled utterance with its encoder front-end features precomputed.
struct EmotionExample {
  std::string id;
  MatrixRM features;  // T x mel_bands, toy::frontend output
  corpus::Emotion label = corpus::Emotion::neutral;
};

EmotionExample make_example(const encoders::EncoderBundle& bundle, std::string id,
                            const audio::Waveform& waveform, corpus::Emotion label);

/// Encoder theta, frozen omega and emotion head phi:
/// pool(last encoder layer) -> phi -> 7 logits.
class BridgeModel {
 public:
  BridgeModel(encoders::EncoderBundle bundle, encoders::ParameterSet head, probe::PoolingRule pooling = {});

  encoders::EncoderBundle& bundle() noexcept { return bundle_; }
  const encoders::EncoderBundle& bundle() const noexcept { return bundle_; }
  encoders::ParameterSet& head() noexcept { return head_; }
  const encoders::ParameterSet& head() const noexcept { return head_; }
  const probe::PoolingRule& pooling() const noexcept { return pooling_; }

  VectorD logits(const MatrixRM& frontend_features) const;
  VectorD logits(const audio::Waveform& waveform) const;
  corpus::Emotion predict(const MatrixRM& frontend_features) const;

 private:
  encoders::EncoderBundle bundle_;
  encoders::ParameterSet head_;
  probe::PoolingRule pooling_;
};

/// Fresh head sized to the bundle's feature width.
BridgeModel attach_head(encoders::EncoderBundle bundle, const probe::PoolingRule& pooling, std::uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  encoders::ParameterSet grad_theta;
  encoders::ParameterSet grad_head;
};

/// Mean cross-entropy over the batch and its gradient with respect to theta and
/// phi. omega takes no part in the computation.
LossAndGrad emotion_loss(const BridgeModel& model, std::span<const EmotionExample> batch);
/// Loss only; skips the backward pass.
double emotion_loss_value(const BridgeModel& model, std::span<const EmotionExample> batch);

}  // namespace emobridge::bridge

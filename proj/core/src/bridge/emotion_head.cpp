#include "emobridge/bridge/emotion_head.hpp"

#include <cmath>

#include "emobridge/error.hpp"

namespace emobridge::bridge {

using encoders::ParameterSet;

encoders::ParameterSet make_emotion_head(Eigen::Index input_width, Rng& rng) {
  if (input_width <= 0) throw InvalidInput("emotion head: input width must be positive");
  ParameterSet head;
  Eigen::Index fan_in = input_width;
  for (std::size_t layer = 0; layer < kHeadWidths.size(); ++layer) {
    const std::string prefix = "fc" + std::to_string(layer + 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : head.add(prefix + ".weight", kHeadWidths[layer], fan_in).values) v = rng.uniform(-bound, bound);
    for (double& v : head.add(prefix + ".bias", 1, kHeadWidths[layer]).values) v = rng.uniform(-bound, bound);
    fan_in = kHeadWidths[layer];
  }
  return head;
}

HeadForward head_forward(const ParameterSet& head, const VectorD& input) {
  const auto& w1 = head.at("fc1.weight");
  if (input.size() != w1.cols) {
    throw InvalidInput("emotion head expects input width " + std::to_string(w1.cols) + ", got " +
                       std::to_string(input.size()));
  }
  HeadForward out;
  out.input = input;
  out.hidden1 = (w1.matrix() * input + head.at("fc1.bias").row().transpose()).cwiseMax(0.0);
  out.hidden2 = (head.at("fc2.weight").matrix() * out.hidden1 + head.at("fc2.bias").row().transpose()).cwiseMax(0.0);
  out.logits = head.at("fc3.weight").matrix() * out.hidden2 + head.at("fc3.bias").row().transpose();
  return out;
}

VectorD head_backward(const ParameterSet& head, const HeadForward& cache, const VectorD& grad_logits,
                      ParameterSet& grad) {
  grad.at("fc3.weight").matrix() += grad_logits * cache.hidden2.transpose();
  grad.at("fc3.bias").row() += grad_logits.transpose();
  VectorD g2 = head.at("fc3.weight").matrix().transpose() * grad_logits;
  g2 = (cache.hidden2.array() > 0.0).select(g2, 0.0);
  grad.at("fc2.weight").matrix() += g2 * cache.hidden1.transpose();
  grad.at("fc2.bias").row() += g2.transpose();
  VectorD g1 = head.at("fc2.weight").matrix().transpose() * g2;
  g1 = (cache.hidden1.array() > 0.0).select(g1, 0.0);
  grad.at("fc1.weight").matrix() += g1 * cache.input.transpose();
  grad.at("fc1.bias").row() += g1.transpose();
  return head.at("fc1.weight").matrix().transpose() * g1;
}

VectorD softmax(const VectorD& logits) {
  const double peak = logits.maxCoeff();
  VectorD e = (logits.array() - peak).exp();
  return e / e.sum();
}

double cross_entropy(const VectorD& logits, std::size_t label) {
  if (label >= static_cast<std::size_t>(logits.size())) throw InvalidInput("cross_entropy: label out of range");
  const double peak = logits.maxCoeff();
  const double log_sum = peak + std::log((logits.array() - peak).exp().sum());
  return log_sum - logits(static_cast<Eigen::Index>(label));
}

}  // namespace emobridge::bridge

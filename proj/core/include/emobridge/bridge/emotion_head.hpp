#pragma once

#include <array>
#include <cstdint>

#include "emobridge/encoders/parameters.hpp"
#include "emobridge/matrix.hpp"
#include "emobridge/rng.hpp"

namespace emobridge::bridge {

/// Widths after the pooled input: two ReLU hidden layers and the 7 emotion logits.
inline constexpr std::array<Eigen::Index, 3> kHeadWidths = {768, 256, 7};

/// phi: input -> 768 -> ReLU -> 256 -> ReLU -> 7. Initialised like torch.nn.Linear,
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
encoders::ParameterSet make_emotion_head(Eigen::Index input_width, Rng& rng);

struct HeadForward {
  VectorD input;
  VectorD hidden1;  // post-ReLU
  VectorD hidden2;  // post-ReLU
  VectorD logits;
};

HeadForward head_forward(const encoders::ParameterSet& head, const VectorD& input);

/// Accumulates dLoss/dphi into grad and returns dLoss/dinput.
VectorD head_backward(const encoders::ParameterSet& head, const HeadForward& cache, const VectorD& grad_logits,
                      encoders::ParameterSet& grad);

VectorD softmax(const VectorD& logits);

/// -log softmax(logits)[label], computed with log-sum-exp.
double cross_entropy(const VectorD& logits, std::size_t label);

}  // namespace emobridge::bridge

#pragma once

#include <vector>

#include "emobridge/audio/spectral.hpp"
#include "emobridge/audio/wav.hpp"
#include "emobridge/encoders/bundle.hpp"
#include "emobridge/rng.hpp"

// Internals of the toy encoder: log-mel front end, a stack of single-head
// self-attention blocks with tanh feed-forward sublayers and residual
// connections, and the matching reverse-mode gradient.
//
// Per layer, with H the T x D input:
//   A  = softmax_rows(H Wq^T (H Wk^T)^T / sqrt(D))
//   Z  = H + A H Wv^T
//   H' = Z + tanh(Z W1^T + c1) W2^T + c2
namespace emobridge::encoders::toy {

/// 25 ms windows with a 20 ms hop.
audio::FrameSpec frame_spec(int sample_rate);

/// Number of encoder time steps for a signal of num_samples.
std::size_t frame_count(std::size_t num_samples, int sample_rate);

/// Normalised log-mel features, T x mel_bands.
MatrixRM frontend(const audio::Waveform& waveform, const ToyEncoderConfig& config);

struct LayerCache {
  MatrixRM q, k, v, attention, z, activation, output;
};

struct Forward {
  MatrixRM embedded;  // input to layer 0
  std::vector<LayerCache> layers;
};

ParameterSet init_theta(const ToyEncoderConfig& config, Rng& rng);
ParameterSet init_omega(const ToyEncoderConfig& config, Rng& rng);

Forward forward(const ParameterSet& theta, const ToyEncoderConfig& config, const MatrixRM& features);

/// Adds dLoss/dtheta to grad, given dLoss/d(output of the last layer).
void backward(const ParameterSet& theta, const ToyEncoderConfig& config, const MatrixRM& features,
              const Forward& cache, const MatrixRM& grad_output, ParameterSet& grad);

}  // namespace emobridge::encoders::toy

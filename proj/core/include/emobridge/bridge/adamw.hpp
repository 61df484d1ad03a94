#pragma once

#include "emobridge/encoders/parameters.hpp"

namespace emobridge::bridge {

struct AdamWConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay (Loshchilov & Hutter), same update order as
/// torch.optim.AdamW: decay, moment update, bias-corrected step.
class AdamW {
 public:
  AdamW(const encoders::ParameterSet& layout, AdamWConfig config);

  void step(encoders::ParameterSet& params, const encoders::ParameterSet& grad);
  std::size_t steps() const noexcept { return steps_; }
  const AdamWConfig& config() const noexcept { return config_; }

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t steps_ = 0;
};

}  // namespace emobridge::bridge

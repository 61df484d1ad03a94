#include "emobridge/bridge/adamw.hpp"

#include <cmath>

#include "emobridge/error.hpp"

namespace emobridge::bridge {

AdamW::AdamW(const encoders::ParameterSet& layout, AdamWConfig config)
    : config_(config), m_(layout.size(), 0.0), v_(layout.size(), 0.0) {
  if (!(config.learning_rate > 0.0)) throw InvalidInput("AdamW: learning rate must be positive");
}

void AdamW::step(encoders::ParameterSet& params, const encoders::ParameterSet& grad) {
  if (!params.same_layout(grad) || params.size() != m_.size()) throw InvalidInput("AdamW: parameter layout changed");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = config_.learning_rate;
  std::size_t k = 0;
  auto& tensors = params.tensors();
  const auto& grads = grad.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& p = tensors[i].values;
    const auto& g = grads[i].values;
    for (std::size_t j = 0; j < p.size(); ++j, ++k) {
      p[j] *= 1.0 - lr * config_.weight_decay;
      m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g[j];
      v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m_[k] / correction1;
      const double v_hat = v_[k] / correction2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace emobridge::bridge

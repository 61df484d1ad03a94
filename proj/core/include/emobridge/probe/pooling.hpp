#pragma once

#include <vector>

#include "emobridge/encoders/bundle.hpp"
#include "emobridge/matrix.hpp"

namespace emobridge::probe {

enum class PoolingMethod { time_mean };

struct PoolingRule {
  PoolingMethod method = PoolingMethod::time_mean;
};

/// Time-mean of one T x D layer. Throws InvalidInput when T == 0.
VectorD pool_layer(const MatrixF& layer, const PoolingRule& rule = {});
VectorD pool_layer(const MatrixRM& layer, const PoolingRule& rule = {});

/// One pooled D-vector per layer.
std::vector<VectorD> pool(const encoders::LayerFeatureSet& features, const PoolingRule& rule = {});

}  // namespace emobridge::probe

#include "emobridge/probe/pooling.hpp"

#include "emobridge/error.hpp"

namespace emobridge::probe {

namespace {

template <typename Matrix>
VectorD time_mean(const Matrix& layer) {
  if (layer.rows() == 0) throw InvalidInput("pool: layer has no time steps");
  VectorD sum = VectorD::Zero(layer.cols());
  for (Eigen::Index t = 0; t < layer.rows(); ++t) sum += layer.row(t).transpose().template cast<double>();
  return sum / static_cast<double>(layer.rows());
}

}  // namespace

VectorD pool_layer(const MatrixF& layer, const PoolingRule& rule) {
  (void)rule;
  return time_mean(layer);
}

VectorD pool_layer(const MatrixRM& layer, const PoolingRule& rule) {
  (void)rule;
  return time_mean(layer);
}

std::vector<VectorD> pool(const encoders::LayerFeatureSet& features, const PoolingRule& rule) {
  std::vector<VectorD> out;
  out.reserve(features.layers.size());
  for (std::size_t l = 0; l < features.layers.size(); ++l) {
    if (!features.layers[l].allFinite()) {
      throw NumericalError("pool: non-finite features in layer " + std::to_string(l) + " of '" +
                           features.utterance_id + "'");
    }
    if (features.layers[l].rows() == 0) {
      throw InvalidInput("pool: layer " + std::to_string(l) + " of '" + features.utterance_id + "' has T = 0");
    }
    out.push_back(pool_layer(features.layers[l], rule));
  }
  return out;
}

}  // namespace emobridge::probe

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emobridge/matrix.hpp"

namespace emobridge::diagnostics {

struct PointMeta {
  std::string utterance_id;
  std::string speaker_id;
  std::string emotion;
  std::string content_id;
};

struct EmbeddingPoint {
  PointMeta meta;
  double x = 0.0;
  double y = 0.0;
  std::string condition;
};

struct EmbeddingExport {
  std::vector<EmbeddingPoint> points;
  std::string projector;
};

/// Dimensionality-reduction boundary. Implementations return an N x 2 matrix
/// and must be deterministic for a fixed seed.
class Projector2D {
 public:
  virtual ~Projector2D() = default;
  virtual std::string name() const = 0;
  virtual MatrixRM project(const MatrixRM& points, std::uint64_t seed) const = 0;
};

/// Principal components 1 and 2 of the centred points. Each axis is signed so
/// its largest-magnitude loading is positive. The seed is unused.
class PcaProjector final : public Projector2D {
 public:
  std::string name() const override { return "pca"; }
  MatrixRM project(const MatrixRM& points, std::uint64_t seed) const override;
};

/// One point per utterance for this condition. Needs >= 3 points and one
/// metadata entry per row.
EmbeddingExport export_embedding(const MatrixRM& vectors, const std::vector<PointMeta>& meta,
                                 const std::string& condition, std::uint64_t seed,
                                 const Projector2D& projector = PcaProjector{});

/// id,x,y,speaker,emotion,content,condition
std::string embedding_csv(const std::vector<EmbeddingExport>& exports);
std::string embedding_json(const std::vector<EmbeddingExport>& exports);

}  // namespace emobridge::diagnostics

#include "emobridge/diagnostics/embedding.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cstdio>

#include "emobridge/corpus/manifest.hpp"
#include "emobridge/error.hpp"

namespace emobridge::diagnostics {

MatrixRM PcaProjector::project(const MatrixRM& points, std::uint64_t) const {
  const Eigen::Index n = points.rows();
  MatrixRM out = MatrixRM::Zero(n, 2);
  if (n == 0) return out;
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const MatrixRM centred = points.rowwise() - mean;
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n);
  if (cov.isZero(0.0)) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::Index d = cov.rows();
  for (Eigen::Index axis = 0; axis < std::min<Eigen::Index>(2, d); ++axis) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - axis);  // eigenvalues ascend
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0.0) v = -v;
    out.col(axis) = centred * v;
  }
  return out;
}

EmbeddingExport export_embedding(const MatrixRM& vectors, const std::vector<PointMeta>& meta,
                                 const std::string& condition, std::uint64_t seed, const Projector2D& projector) {
  if (vectors.rows() < 3) throw InvalidInput("export_embedding: need at least 3 points");
  if (static_cast<std::size_t>(vectors.rows()) != meta.size()) {
    throw InvalidInput("export_embedding: metadata count does not match the number of vectors");
  }
  const MatrixRM xy = projector.project(vectors, seed);
  if (xy.rows() != vectors.rows() || xy.cols() != 2) throw InvalidInput("export_embedding: projector must return N x 2");
  if (!xy.allFinite()) throw NumericalError("export_embedding: projector produced non-finite coordinates");
  EmbeddingExport out;
  out.projector = projector.name();
  for (Eigen::Index i = 0; i < xy.rows(); ++i) {
    out.points.push_back({meta[static_cast<std::size_t>(i)], xy(i, 0), xy(i, 1), condition});
  }
  return out;
}

std::string embedding_csv(const std::vector<EmbeddingExport>& exports) {
  using corpus::csv_escape;
  std::string out = "id,x,y,speaker,emotion,content,condition\n";
  char buffer[80];
  for (const auto& e : exports) {
    for (const auto& p : e.points) {
      std::snprintf(buffer, sizeof buffer, "%.17g,%.17g", p.x, p.y);
      out += csv_escape(p.meta.utterance_id) + "," + buffer + "," + csv_escape(p.meta.speaker_id) + "," +
             csv_escape(p.meta.emotion) + "," + csv_escape(p.meta.content_id) + "," + csv_escape(p.condition) + "\n";
    }
  }
  return out;
}

std::string embedding_json(const std::vector<EmbeddingExport>& exports) {
  nlohmann::json points = nlohmann::json::array();
  std::string projector;
  for (const auto& e : exports) {
    projector = e.projector;
    for (const auto& p : e.points) {
      points.push_back({{"id", p.meta.utterance_id},
                        {"x", p.x},
                        {"y", p.y},
                        {"speaker", p.meta.speaker_id},
                        {"emotion", p.meta.emotion},
                        {"content", p.meta.content_id},
                        {"condition", p.condition}});
    }
  }
  return nlohmann::json({{"projector", projector}, {"points", points}}).dump(2) + "\n";
}

}  // namespace emobridge::diagnostics

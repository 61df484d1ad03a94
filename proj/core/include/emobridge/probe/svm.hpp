#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "emobridge/matrix.hpp"

namespace emobridge::probe {

enum class KernelType { rbf, linear };
enum class GammaRule { scale, fixed };

std::string_view to_string(KernelType kernel);
KernelType parse_kernel(std::string_view name);

/// C-SVC settings. The defaults mirror the usual library defaults:
/// RBF kernel, C = 1, gamma = 1 / (D * Var(X)) over all training entries.
struct SvmConfig {
  KernelType kernel = KernelType::rbf;
  double c = 1.0;
  GammaRule gamma_rule = GammaRule::scale;
  double gamma = 0.0;  // used when gamma_rule == fixed
  double tolerance = 1e-3;
  std::size_t max_iterations = 10'000'000;
  std::size_t cache_megabytes = 256;
};

/// gamma for the "scale" rule; 1.0 when the data has zero variance.
double scale_gamma(const MatrixRM& x);

struct SvmFitInfo {
  std::size_t iterations = 0;
  std::size_t support_vectors = 0;
  bool converged = true;
};

/// Two-class soft-margin SVM trained with SMO using second-order working-set
/// selection. Labels are +1 / -1; decision values are positive toward +1.
class BinarySvm {
 public:
  static BinarySvm fit(const MatrixRM& x, std::span<const int> y, const SvmConfig& config);

  double decision(const Eigen::Ref<const VectorD>& point) const;
  VectorD decision_all(const MatrixRM& points) const;

  Eigen::Index dim() const noexcept { return support_.cols(); }
  double gamma() const noexcept { return gamma_; }
  double bias() const noexcept { return -rho_; }
  const SvmFitInfo& info() const noexcept { return info_; }
  KernelType kernel() const noexcept { return kernel_; }

 private:
  KernelType kernel_ = KernelType::rbf;
  double gamma_ = 1.0;
  double rho_ = 0.0;
  MatrixRM support_;   // support vectors, one per row
  VectorD coef_;       // alpha_i * y_i
  VectorD sq_norms_;   // |sv_i|^2 for the RBF kernel
  SvmFitInfo info_;
};

/// One-vs-one multi-class SVM. Ties in the vote go to the smaller class id.
class MulticlassSvm {
 public:
  static MulticlassSvm fit(const MatrixRM& x, std::span<const int> labels, const SvmConfig& config);
  int predict(const Eigen::Ref<const VectorD>& point) const;
  std::vector<int> predict_all(const MatrixRM& points) const;
  const std::vector<int>& classes() const noexcept { return classes_; }

 private:
  std::vector<int> classes_;
  std::vector<BinarySvm> machines_;  // pairs (i, j), i < j, in row order
};

}  // namespace emobridge::probe

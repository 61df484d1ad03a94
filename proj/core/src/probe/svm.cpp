#include "emobridge/probe/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <map>
#include <set>
#include <unordered_map>

#include "emobridge/error.hpp"

namespace emobridge::probe {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Kernel rows on demand with an LRU bound on memory.
class KernelRows {
 public:
  KernelRows(const MatrixRM& x, KernelType kernel, double gamma, std::size_t budget_bytes)
      : x_(x), kernel_(kernel), gamma_(gamma), n_(x.rows()) {
    sq_norms_ = x.rowwise().squaredNorm();
    const std::size_t row_bytes = static_cast<std::size_t>(n_) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(row_bytes, 1));
    diagonal_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) diagonal_(i) = kernel_ == KernelType::rbf ? 1.0 : sq_norms_(i);
  }

  const VectorD& row(Eigen::Index i) {
    if (auto it = rows_.find(i); it != rows_.end()) {
      order_.splice(order_.begin(), order_, it->second.second);
      return it->second.first;
    }
    if (rows_.size() >= capacity_) {
      rows_.erase(order_.back());
      order_.pop_back();
    }
    VectorD values = x_ * x_.row(i).transpose();
    if (kernel_ == KernelType::rbf) {
      values = (-gamma_ * ((sq_norms_.array() + sq_norms_(i)) - 2.0 * values.array()).max(0.0)).exp().matrix();
    }
    order_.push_front(i);
    auto [it, inserted] = rows_.emplace(i, std::make_pair(std::move(values), order_.begin()));
    return it->second.first;
  }

  double diagonal(Eigen::Index i) const { return diagonal_(i); }

 private:
  const MatrixRM& x_;
  KernelType kernel_;
  double gamma_;
  Eigen::Index n_;
  VectorD sq_norms_;
  VectorD diagonal_;
  std::size_t capacity_;
  std::list<Eigen::Index> order_;
  std::unordered_map<Eigen::Index, std::pair<VectorD, std::list<Eigen::Index>::iterator>> rows_;
};

}  // namespace

std::string_view to_string(KernelType kernel) { return kernel == KernelType::rbf ? "rbf" : "linear"; }

KernelType parse_kernel(std::string_view name) {
  if (name == "rbf") return KernelType::rbf;
  if (name == "linear") return KernelType::linear;
  throw InvalidInput("unknown kernel '" + std::string(name) + "' (expected rbf or linear)");
}

double scale_gamma(const MatrixRM& x) {
  const double n = static_cast<double>(x.size());
  if (n == 0) return 1.0;
  const double mean = x.sum() / n;
  const double var = (x.array() - mean).square().sum() / n;
  return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

BinarySvm BinarySvm::fit(const MatrixRM& x, std::span<const int> y, const SvmConfig& config) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw InvalidInput("svm: feature rows and labels differ in length");
  if (n < 2) throw InvalidInput("svm: need at least two training points");
  if (!x.allFinite()) throw NumericalError("svm: non-finite training features");
  if (!(config.c > 0.0)) throw InvalidInput("svm: C must be positive");
  bool pos = false, neg = false;
  for (int label : y) {
    if (label == 1) pos = true;
    else if (label == -1) neg = true;
    else throw InvalidInput("svm: labels must be +1 or -1");
  }
  if (!pos || !neg) throw InvalidInput("svm: training data contains a single class");

  BinarySvm svm;
  svm.kernel_ = config.kernel;
  svm.gamma_ = config.gamma_rule == GammaRule::scale ? scale_gamma(x) : config.gamma;
  if (config.kernel == KernelType::rbf && !(svm.gamma_ > 0.0)) throw InvalidInput("svm: gamma must be positive");

  KernelRows kernel(x, config.kernel, svm.gamma_, config.cache_megabytes << 20);
  const double c = config.c;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  auto yv = [&](Eigen::Index t) { return static_cast<double>(y[t]); };
  auto upper = [&](Eigen::Index t) { return alpha[t] >= c; };
  auto lower = [&](Eigen::Index t) { return alpha[t] <= 0.0; };

  std::size_t iter = 0;
  bool converged = false;
  while (iter < config.max_iterations) {
    double gmax = -kInf, gmax2 = -kInf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; i = t; }
      } else {
        if (!lower(t) && grad[t] >= gmax) { gmax = grad[t]; i = t; }
      }
    }
    Eigen::Index j = -1;
    double best_obj = kInf;
    if (i >= 0) {
      const VectorD& ki = kernel.row(i);
      for (Eigen::Index t = 0; t < n; ++t) {
        const double qit = yv(i) * yv(t) * ki(t);
        if (y[t] == 1) {
          if (lower(t)) continue;
          const double diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (diff > 0.0) {
            double quad = kernel.diagonal(i) + kernel.diagonal(t) - 2.0 * yv(i) * qit;
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j = t; }
          }
        } else {
          if (upper(t)) continue;
          const double diff = gmax - grad[t];
          gmax2 = std::max(gmax2, -grad[t]);
          if (diff > 0.0) {
            double quad = kernel.diagonal(i) + kernel.diagonal(t) + 2.0 * yv(i) * qit;
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j = t; }
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < config.tolerance) {
      converged = true;
      break;
    }
    ++iter;

    // Copy row i: fetching row j may evict it from the cache.
    const VectorD ki = kernel.row(i);
    const VectorD& kj = kernel.row(j);
    const double qij = yv(i) * yv(j) * ki(j);
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = kernel.diagonal(i) + kernel.diagonal(j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = kernel.diagonal(i) + kernel.diagonal(j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (Eigen::Index t = 0; t < n; ++t) {
      grad[t] += yv(t) * (yv(i) * ki(t) * di + yv(j) * kj(t) * dj);
    }
  }

  // rho: mean of y*G over free vectors, else the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yv(t) * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  svm.rho_ = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;

  std::vector<Eigen::Index> support;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) support.push_back(t);
  }
  svm.support_.resize(static_cast<Eigen::Index>(support.size()), x.cols());
  svm.coef_.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    svm.support_.row(static_cast<Eigen::Index>(k)) = x.row(support[k]);
    svm.coef_(static_cast<Eigen::Index>(k)) = alpha[support[k]] * yv(support[k]);
  }
  svm.sq_norms_ = svm.support_.rowwise().squaredNorm();
  svm.info_ = {iter, support.size(), converged};
  return svm;
}

double BinarySvm::decision(const Eigen::Ref<const VectorD>& point) const {
  if (point.size() != support_.cols()) {
    throw InvalidInput("svm: expected a " + std::to_string(support_.cols()) + "-dimensional vector, got " +
                       std::to_string(point.size()));
  }
  VectorD k = support_ * point;
  if (kernel_ == KernelType::rbf) {
    k = (-gamma_ * ((sq_norms_.array() + point.squaredNorm()) - 2.0 * k.array()).max(0.0)).exp().matrix();
  }
  return coef_.dot(k) - rho_;
}

VectorD BinarySvm::decision_all(const MatrixRM& points) const {
  VectorD out(points.rows());
  for (Eigen::Index r = 0; r < points.rows(); ++r) out(r) = decision(points.row(r).transpose());
  return out;
}

MulticlassSvm MulticlassSvm::fit(const MatrixRM& x, std::span<const int> labels, const SvmConfig& config) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw InvalidInput("svm: feature rows and labels differ");
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InvalidInput("svm: training data contains a single class");
  MulticlassSvm out;
  out.classes_.assign(distinct.begin(), distinct.end());
  SvmConfig pair_config = config;
  if (config.gamma_rule == GammaRule::scale) {
    pair_config.gamma_rule = GammaRule::fixed;
    pair_config.gamma = scale_gamma(x);
  }
  for (std::size_t a = 0; a < out.classes_.size(); ++a) {
    for (std::size_t b = a + 1; b < out.classes_.size(); ++b) {
      std::vector<Eigen::Index> rows;
      std::vector<int> y;
      for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == out.classes_[a]) { rows.push_back(static_cast<Eigen::Index>(r)); y.push_back(1); }
        else if (labels[r] == out.classes_[b]) { rows.push_back(static_cast<Eigen::Index>(r)); y.push_back(-1); }
      }
      MatrixRM sub(static_cast<Eigen::Index>(rows.size()), x.cols());
      for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
      out.machines_.push_back(BinarySvm::fit(sub, y, pair_config));
    }
  }
  return out;
}

int MulticlassSvm::predict(const Eigen::Ref<const VectorD>& point) const {
  std::vector<int> votes(classes_.size(), 0);
  std::size_t m = 0;
  for (std::size_t a = 0; a < classes_.size(); ++a) {
    for (std::size_t b = a + 1; b < classes_.size(); ++b, ++m) {
      ++votes[machines_[m].decision(point) > 0.0 ? a : b];
    }
  }
  return classes_[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
}

std::vector<int> MulticlassSvm::predict_all(const MatrixRM& points) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index r = 0; r < points.rows(); ++r) out.push_back(predict(points.row(r).transpose()));
  return out;
}

}  // namespace emobridge::probe

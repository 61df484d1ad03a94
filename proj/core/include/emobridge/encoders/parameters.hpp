#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emobridge/matrix.hpp"

namespace emobridge::encoders {

/// Named row-major tensor of doubles (matrices and 1 x n bias rows).
struct Tensor {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<double> values;

  Eigen::Map<MatrixRM> matrix() { return {values.data(), rows, cols}; }
  Eigen::Map<const MatrixRM> matrix() const { return {values.data(), rows, cols}; }
  Eigen::Map<Eigen::RowVectorXd> row() { return {values.data(), cols}; }
  Eigen::Map<const Eigen::RowVectorXd> row() const { return {values.data(), cols}; }
  std::size_t size() const { return values.size(); }
};

/// Ordered collection of named tensors with a flat coordinate view.
class ParameterSet {
 public:
  Tensor& add(std::string name, Eigen::Index rows, Eigen::Index cols);

  bool contains(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  std::vector<Tensor>& tensors() noexcept { return tensors_; }

  /// Total number of scalars.
  std::size_t size() const noexcept { return total_; }
  double& flat(std::size_t index);
  double flat(std::size_t index) const;
  /// Name of the tensor holding a flat coordinate.
  const std::string& owner(std::size_t index) const;

  ParameterSet zeros_like() const;
  void set_zero();
  bool same_layout(const ParameterSet& other) const;

  /// SHA-256 over names, shapes and the exact bit patterns of the values.
  std::string checksum() const;

 private:
  std::size_t locate(std::size_t index) const;

  std::vector<Tensor> tensors_;
  std::vector<std::size_t> offsets_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t total_ = 0;
};

// Checkpoint file: "EMBP", version u32, tensor count u32, then per tensor
// [name_len u16][name][rows u32][cols u32][rows*cols float64 LE].
// Groups are stored as "<group>/<tensor name>".
inline constexpr char kCheckpointMagic[4] = {'E', 'M', 'B', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const std::map<std::string, const ParameterSet*>& groups);
std::map<std::string, ParameterSet> read_checkpoint(const std::string& path);

}  // namespace emobridge::encoders

#include "emobridge/encoders/parameters.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "emobridge/binary_io.hpp"
#include "emobridge/checksum.hpp"
#include "emobridge/error.hpp"

namespace emobridge::encoders {

using binary::read_le;
using binary::write_le;

Tensor& ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) throw InvalidInput("tensor '" + name + "' must have positive shape");
  if (index_.count(name) != 0) throw InvalidInput("duplicate tensor name '" + name + "'");
  Tensor tensor;
  tensor.name = name;
  tensor.rows = rows;
  tensor.cols = cols;
  tensor.values.assign(static_cast<std::size_t>(rows * cols), 0.0);
  offsets_.push_back(total_);
  total_ += tensor.values.size();
  index_.emplace(std::move(name), tensors_.size());
  tensors_.push_back(std::move(tensor));
  return tensors_.back();
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

Tensor& ParameterSet::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw NotFound("no tensor named '" + std::string(name) + "'");
  return tensors_[it->second];
}

const Tensor& ParameterSet::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw NotFound("no tensor named '" + std::string(name) + "'");
  return tensors_[it->second];
}

std::size_t ParameterSet::locate(std::size_t index) const {
  if (index >= total_) throw InvalidInput("flat parameter index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

double& ParameterSet::flat(std::size_t index) {
  const std::size_t t = locate(index);
  return tensors_[t].values[index - offsets_[t]];
}

double ParameterSet::flat(std::size_t index) const {
  const std::size_t t = locate(index);
  return tensors_[t].values[index - offsets_[t]];
}

const std::string& ParameterSet::owner(std::size_t index) const { return tensors_[locate(index)].name; }

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& t : tensors_) out.add(t.name, t.rows, t.cols);
  return out;
}

void ParameterSet::set_zero() {
  for (auto& t : tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

std::string ParameterSet::checksum() const {
  Sha256 hasher;
  for (const auto& t : tensors_) {
    std::ostringstream header;
    binary::write_string_u16(header, t.name);
    write_le<std::uint64_t>(header, static_cast<std::uint64_t>(t.rows));
    write_le<std::uint64_t>(header, static_cast<std::uint64_t>(t.cols));
    hasher.update(header.str());
    std::string bytes;
    bytes.reserve(t.values.size() * 8);
    for (double v : t.values) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
    }
    hasher.update(bytes);
  }
  return hasher.hex_digest();
}

void write_checkpoint(const std::string& path, const std::map<std::string, const ParameterSet*>& groups) {
  std::ostringstream out;
  out.write(kCheckpointMagic, 4);
  write_le<std::uint32_t>(out, kCheckpointVersion);
  std::uint32_t count = 0;
  for (const auto& [group, params] : groups) count += static_cast<std::uint32_t>(params->tensors().size());
  write_le<std::uint32_t>(out, count);
  for (const auto& [group, params] : groups) {
    for (const auto& t : params->tensors()) {
      binary::write_string_u16(out, group + "/" + t.name);
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
      for (double v : t.values) write_le<double>(out, v);
    }
  }
  binary::write_file_atomically(path, out.str());
}

std::map<std::string, ParameterSet> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("checkpoint not found: " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw FormatError(path + ": bad checkpoint magic");
  }
  const auto version = read_le<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = read_le<std::uint32_t>(in, "tensor count");
  std::map<std::string, ParameterSet> groups;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string full = binary::read_string_u16(in, "tensor name");
    const auto slash = full.find('/');
    if (slash == std::string::npos) throw FormatError(path + ": tensor name without group: " + full);
    const auto rows = read_le<std::uint32_t>(in, "rows");
    const auto cols = read_le<std::uint32_t>(in, "cols");
    Tensor& t = groups[full.substr(0, slash)].add(full.substr(slash + 1), rows, cols);
    for (double& v : t.values) v = read_le<double>(in, "tensor value");
  }
  return groups;
}

}  // namespace emobridge::encoders

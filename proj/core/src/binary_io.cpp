#include "emobridge/binary_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace emobridge::binary {

void write_string_u16(std::ostream& out, const std::string& text) {
  if (text.size() > 0xFFFF) throw InvalidInput("string longer than 65535 bytes: " + text.substr(0, 32));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_string_u16(std::istream& in, const char* what) {
  const auto length = read_le<std::uint16_t>(in, what);
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (in.gcount() != length) throw FormatError(std::string("truncated ") + what);
  return text;
}

void write_file_atomically(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + temp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("write failed for " + temp.string());
  }
  fs::rename(temp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace emobridge::binary

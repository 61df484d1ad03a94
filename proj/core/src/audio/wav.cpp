#include "emobridge/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "emobridge/binary_io.hpp"
#include "emobridge/error.hpp"

namespace emobridge::audio {

using binary::read_le;
using binary::write_le;

namespace {

struct DataChunk {
  int sample_rate = 0;
  std::uint32_t bytes = 0;
};

// Leaves the stream positioned at the first sample.
DataChunk seek_to_data(std::istream& in, const std::string& path) {
  char tag[4];
  auto read_tag = [&](const char* what) {
    in.read(tag, 4);
    if (in.gcount() != 4) throw FormatError(path + ": truncated " + what);
    return std::string(tag, 4);
  };
  if (read_tag("RIFF header") != "RIFF") throw FormatError(path + ": not a RIFF file");
  read_le<std::uint32_t>(in, "RIFF size");
  if (read_tag("WAVE tag") != "WAVE") throw FormatError(path + ": not a WAVE file");

  bool have_format = false;
  std::uint32_t rate = 0;
  while (true) {
    const std::string chunk = read_tag("chunk header");
    const auto size = read_le<std::uint32_t>(in, "chunk size");
    if (chunk == "fmt ") {
      const auto format = read_le<std::uint16_t>(in, "format");
      const auto channels = read_le<std::uint16_t>(in, "channels");
      rate = read_le<std::uint32_t>(in, "sample rate");
      read_le<std::uint32_t>(in, "byte rate");
      read_le<std::uint16_t>(in, "block align");
      const auto bits = read_le<std::uint16_t>(in, "bits per sample");
      if (size > 16) in.seekg(size - 16 + (size & 1u), std::ios::cur);
      if (format != 1 || bits != 16 || channels != 1) {
        std::ostringstream msg;
        msg << path << ": unsupported WAV (format " << format << ", " << bits << " bit, "
            << channels << " channel); expected 16-bit PCM mono";
        throw FormatError(msg.str());
      }
      have_format = true;
    } else if (chunk == "data") {
      if (!have_format) throw FormatError(path + ": data chunk before fmt chunk");
      return {static_cast<int>(rate), size};
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
  }
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open audio file " + path);
  const DataChunk data = seek_to_data(in, path);
  Waveform wave;
  wave.sample_rate = data.sample_rate;
  wave.samples.resize(data.bytes / 2);
  for (auto& sample : wave.samples) {
    sample = read_le<std::int16_t>(in, "sample") / 32768.0;
  }
  return wave;
}

WavInfo read_wav_info(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open audio file " + path);
  const DataChunk data = seek_to_data(in, path);
  return {data.sample_rate, data.bytes / 2};
}

void write_wav(const std::string& path, const Waveform& waveform) {
  if (waveform.sample_rate <= 0) throw InvalidInput("write_wav: sample rate must be positive");
  std::ostringstream out;
  const auto data_bytes = static_cast<std::uint32_t>(waveform.samples.size() * 2);
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(waveform.sample_rate));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(waveform.sample_rate) * 2);
  write_le<std::uint16_t>(out, 2);
  write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);
  for (double sample : waveform.samples) {
    const double clipped = std::clamp(sample, -1.0, 1.0);
    const long quantized = std::lround(clipped * 32767.0);
    write_le<std::int16_t>(out, static_cast<std::int16_t>(quantized));
  }
  binary::write_file_atomically(path, out.str());
}

}  // namespace emobridge::audio

// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace arnse {
namespace {

std::uint32_t LoadU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t LoadU16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void StoreU32(std::vector<std::uint8_t>* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void StoreU16(std::vector<std::uint8_t>* out, std::uint16_t v) {
  out->push_back(static_cast<std::uint8_t>(v & 0xff));
  out->push_back(static_cast<std::uint8_t>(v >> 8));
}

void StoreTag(std::vector<std::uint8_t>* out, const char* tag) {
  out->insert(out->end(), tag, tag + 4);
}

[[noreturn]] void Malformed(const std::string& why) {
  throw WavError(WavErrorKind::kMalformedHeader, "malformed WAV header: " + why);
}

}  // namespace

std::int16_t ToPcm16(double sample) {
  double clamped = std::clamp(sample, -1.0, 1.0);
  // std::round rounds half away from zero; +1.0 saturates to 32767.
  double scaled = std::round(clamped * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

AudioBuffer DecodeWav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) Malformed("file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) Malformed("missing RIFF tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) Malformed("missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::uint32_t len = LoadU32(chunk + 4);
    std::size_t body = pos + 8;
    if (len > bytes.size() - body) Malformed("chunk extends past end of file");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) Malformed("fmt chunk too short");
      std::uint16_t format = LoadU16(chunk + 8);
      channels = LoadU16(chunk + 10);
      rate = LoadU32(chunk + 12);
      bits = LoadU16(chunk + 22);
      if (format != 1) {
        throw WavError(WavErrorKind::kUnsupportedCompression,
                       "unsupported compression (format tag " + std::to_string(format) + ")");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) Malformed("missing fmt chunk");
  if (data == nullptr) Malformed("missing data chunk");
  if (channels != 1) {
    throw WavError(WavErrorKind::kUnsupportedChannelCount,
                   "unsupported channel count " + std::to_string(channels));
  }
  if (bits != 16) {
    throw WavError(WavErrorKind::kUnsupportedBitDepth,
                   "unsupported bit depth " + std::to_string(bits));
  }
  if (rate == 0) Malformed("zero sample rate");
  if (data_len % 2 != 0) Malformed("odd-sized 16-bit data chunk");

  Eigen::Index n = static_cast<Eigen::Index>(data_len / 2);
  Eigen::VectorXd samples(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    samples[i] = FromPcm16(static_cast<std::int16_t>(LoadU16(data + 2 * i)));
  }
  return AudioBuffer(std::move(samples), static_cast<int>(rate));
}

AudioBuffer ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeWav(bytes);
}

std::vector<std::uint8_t> EncodeWav(const AudioBuffer& buf) {
  if (buf.sample_rate <= 0) throw DataError("sample rate must be positive");
  const std::uint32_t data_len = static_cast<std::uint32_t>(buf.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  StoreTag(&out, "RIFF");
  StoreU32(&out, 36 + data_len);
  StoreTag(&out, "WAVE");
  StoreTag(&out, "fmt ");
  StoreU32(&out, 16);
  StoreU16(&out, 1);
  StoreU16(&out, 1);
  StoreU32(&out, static_cast<std::uint32_t>(buf.sample_rate));
  StoreU32(&out, static_cast<std::uint32_t>(buf.sample_rate) * 2);
  StoreU16(&out, 2);
  StoreU16(&out, 16);
  StoreTag(&out, "data");
  StoreU32(&out, data_len);
  for (Eigen::Index i = 0; i < buf.size(); ++i) {
    StoreU16(&out, static_cast<std::uint16_t>(ToPcm16(buf.samples[i])));
  }
  return out;
}

void WriteWav(const AudioBuffer& buf, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = EncodeWav(buf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WavError(WavErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError(WavErrorKind::kIo, "write failed for " + path.string());
}

AudioBuffer QuantizePcm16(const AudioBuffer& buf) {
  Eigen::VectorXd q = buf.samples.unaryExpr([](double x) { return FromPcm16(ToPcm16(x)); });
  return AudioBuffer(std::move(q), buf.sample_rate);
}

}  // namespace arnse

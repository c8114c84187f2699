// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_AUDIO_IO_HPP_
#define ARNSE_AUDIO_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "arnse/error.hpp"

namespace arnse {

// Mono waveform, nominal amplitude range [-1, 1].
struct AudioBuffer {
  Eigen::VectorXd samples;
  int sample_rate = 16000;

  AudioBuffer() = default;
  AudioBuffer(Eigen::VectorXd s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  Eigen::Index size() const { return samples.size(); }
};

// Distinct failure classes of the WAV reader. Each one carries its own message.
enum class WavErrorKind {
  kIo,
  kMalformedHeader,
  kUnsupportedCompression,
  kUnsupportedChannelCount,
  kUnsupportedBitDepth,
};

class WavError : public DataError {
 public:
  WavError(WavErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  WavErrorKind kind() const { return kind_; }

 private:
  WavErrorKind kind_;
};

// Reads a RIFF/WAVE, PCM 16-bit mono file. Samples are int16 / 32768.
AudioBuffer ReadWav(const std::filesystem::path& path);
AudioBuffer DecodeWav(const std::vector<std::uint8_t>& bytes);

// Writes 16-bit mono PCM. Samples are clamped to [-1, 1], scaled by 32768,
// rounded half away from zero and saturated to the int16 range, so a buffer
// read from disk is rewritten bit-exactly.
void WriteWav(const AudioBuffer& buf, const std::filesystem::path& path);
std::vector<std::uint8_t> EncodeWav(const AudioBuffer& buf);

std::int16_t ToPcm16(double sample);
inline double FromPcm16(std::int16_t v) { return static_cast<double>(v) / 32768.0; }

// The buffer as it reads back after a WriteWav/ReadWav round trip.
AudioBuffer QuantizePcm16(const AudioBuffer& buf);

}  // namespace arnse

#endif  // ARNSE_AUDIO_IO_HPP_

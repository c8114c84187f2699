// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_CHECKPOINT_HPP_
#define ARNSE_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "arnse/arn.hpp"
#include "arnse/types.hpp"

namespace arnse {

struct CheckpointMeta {
  std::uint32_t epoch = 0;
  double val_pcm = std::numeric_limits<double>::quiet_NaN();
  double val_stoi = std::numeric_limits<double>::quiet_NaN();
};

/**
 * Trained weights with provenance. On disk (all little-endian):
 *
 *   "ARNC"  u32 version (1)
 *   u32 frame_len, u32 hop, u32 latent, u32 num_blocks, u32 heads,
 *   u32 ffn_expansion, f32 dropout
 *   u32 parameter count
 *   per parameter: u16 name length, UTF-8 name, u8 rank (2), u32 rows,
 *                  u32 cols, rows*cols f32 row-major
 *   u32 epoch, f64 validation PCM loss, f64 validation STOI
 */
struct Checkpoint {
  ArnConfig config;
  ParamSet<float> params;
  CheckpointMeta meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt);
Checkpoint DecodeCheckpoint(const std::vector<std::uint8_t>& bytes);

// Writes to a temporary file and renames it into place.
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

template <typename Scalar>
ParamSet<float> ToFloatParams(const ParamSet<Scalar>& params) {
  ParamSet<float> out;
  for (const auto& [name, m] : params) out.emplace(name, m.template cast<float>());
  return out;
}

template <typename Scalar>
ParamSet<Scalar> FromFloatParams(const ParamSet<float>& params) {
  ParamSet<Scalar> out;
  for (const auto& [name, m] : params) out.emplace(name, m.template cast<Scalar>());
  return out;
}

// Parameters as they read back from a checkpoint.
template <typename Scalar>
ParamSet<Scalar> RoundToStored(const ParamSet<Scalar>& params) {
  return FromFloatParams<Scalar>(ToFloatParams(params));
}

}  // namespace arnse

#endif  // ARNSE_CHECKPOINT_HPP_

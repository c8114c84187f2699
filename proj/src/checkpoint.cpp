// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "arnse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace arnse {
namespace {

class Writer {
 public:
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void Int(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F32(float v) { Int(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { Int(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  void Need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw DataError("checkpoint truncated");
  }
  template <typename T>
  T Int() {
    Need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  float F32() { return std::bit_cast<float>(Int<std::uint32_t>()); }
  double F64() { return std::bit_cast<double>(Int<std::uint64_t>()); }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool Done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt) {
  CheckParams(ckpt.config, ckpt.params);
  Writer w;
  w.Bytes("ARNC", 4);
  w.Int<std::uint32_t>(kCheckpointVersion);
  const ArnConfig& c = ckpt.config;
  for (int v : {c.frame_len, c.hop, c.latent, c.num_blocks, c.heads, c.ffn_expansion}) {
    w.Int<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  w.F32(static_cast<float>(c.dropout));
  w.Int<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, m] : ckpt.params) {
    if (name.size() > 0xffff) throw DataError("parameter name too long");
    w.Int<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.Bytes(name.data(), name.size());
    w.Int<std::uint8_t>(2);
    w.Int<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.Int<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.F32(m(i, j));
    }
  }
  w.Int<std::uint32_t>(ckpt.meta.epoch);
  w.F64(ckpt.meta.val_pcm);
  w.F64(ckpt.meta.val_stoi);
  return w.Take();
}

Checkpoint DecodeCheckpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.Str(4) != "ARNC") throw DataError("not a checkpoint (bad magic)");
  const auto version = r.Int<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ArnConfig& c = ckpt.config;
  c.frame_len = static_cast<int>(r.Int<std::uint32_t>());
  c.hop = static_cast<int>(r.Int<std::uint32_t>());
  c.latent = static_cast<int>(r.Int<std::uint32_t>());
  c.num_blocks = static_cast<int>(r.Int<std::uint32_t>());
  c.heads = static_cast<int>(r.Int<std::uint32_t>());
  c.ffn_expansion = static_cast<int>(r.Int<std::uint32_t>());
  c.dropout = static_cast<double>(r.F32());
  try {
    c.Validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config invalid: ") + e.what());
  }
  const auto count = r.Int<std::uint32_t>();
  for (std::uint32_t p = 0; p < count; ++p) {
    const auto len = r.Int<std::uint16_t>();
    std::string name = r.Str(len);
    const auto rank = r.Int<std::uint8_t>();
    if (rank != 2) throw DataError("unsupported parameter rank in checkpoint");
    const auto rows = r.Int<std::uint32_t>();
    const auto cols = r.Int<std::uint32_t>();
    r.Need(4ull * rows * cols);
    MatrixX<float> m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.F32();
    }
    ckpt.params.emplace(std::move(name), std::move(m));
  }
  ckpt.meta.epoch = r.Int<std::uint32_t>();
  ckpt.meta.val_pcm = r.F64();
  ckpt.meta.val_stoi = r.F64();
  if (!r.Done()) throw DataError("trailing bytes after checkpoint footer");
  CheckParams(ckpt.config, ckpt.params);
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = EncodeCheckpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes);
}

}  // namespace arnse

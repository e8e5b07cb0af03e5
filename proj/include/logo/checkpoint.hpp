#pragma once
// Named-tensor checkpoint file: a magic tag, a tensor count, then per tensor
// a name, a shape header, and the raw little-endian 64-bit float payload.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "logo/errors.hpp"
#include "logo/tensor.hpp"

namespace logo {

namespace ckpt_detail {

constexpr char kMagic[8] = {'L', 'G', 'C', 'K', 'P', 'T', '0', '1'};

inline void put_u32(std::ofstream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void put_u64(std::ofstream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void put_f64(std::ofstream& os, double d) {
  put_u64(os, std::bit_cast<std::uint64_t>(d));
}

inline std::uint32_t get_u32(std::ifstream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint: truncated u32");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t get_u64(std::ifstream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("checkpoint: truncated u64");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::ifstream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path,
                            const std::vector<std::pair<std::string, const Tensor*>>& items) {
  namespace d = ckpt_detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open for write: " + path);
  os.write(d::kMagic, 8);
  d::put_u32(os, static_cast<std::uint32_t>(items.size()));
  for (const auto& [name, t] : items) {
    d::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    d::put_u32(os, static_cast<std::uint32_t>(t->ndim()));
    for (std::size_t i = 0; i < t->ndim(); ++i) d::put_u64(os, t->extent(i));
    for (std::size_t i = 0; i < t->size(); ++i) d::put_f64(os, (*t)[i]);
  }
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

inline std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  namespace d = ckpt_detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, d::kMagic, 8) != 0) {
    throw IoError("checkpoint: bad magic in " + path);
  }
  std::uint32_t count = d::get_u32(is);
  std::map<std::string, Tensor> out;
  for (std::uint32_t n = 0; n < count; ++n) {
    std::uint32_t name_len = d::get_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw IoError("checkpoint: truncated name");
    std::uint32_t ndim = d::get_u32(is);
    std::vector<std::size_t> shape(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) shape[i] = static_cast<std::size_t>(d::get_u64(is));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = d::get_f64(is);
    if (!out.emplace(std::move(name), std::move(t)).second) {
      throw IoError("checkpoint: duplicate tensor name in " + path);
    }
  }
  return out;
}

}  // namespace logo

#pragma once

// Checkpoint container. All integers and payloads are little-endian.
//
//   offset  size  field
//   0       8     magic "GSHIELD\0"
//   8       4     u32 format version (1)
//   12      4     u32 tensor count
//   then per tensor:
//           4     u32 name length L
//           L     name bytes (UTF-8, no terminator)
//           8     u64 rows
//           8     u64 cols
//           8*r*c f64 values, row-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield {

inline constexpr std::array<char, 8> kCheckpointMagic = {'G', 'S', 'H', 'I', 'E', 'L', 'D', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Mat value;
};

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint: truncated file");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::vector<unsigned char> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    detail::put_le<std::uint64_t>(out, t.value.rows());
    detail::put_le<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.data()) detail::put_le<double>(out, v);
  }
  return out;
}

inline std::vector<NamedTensor> decode_checkpoint(const std::vector<unsigned char>& in) {
  if (in.size() < kCheckpointMagic.size() ||
      std::memcmp(in.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0)
    throw DataError("checkpoint: bad magic bytes");
  std::size_t pos = kCheckpointMagic.size();
  const auto version = detail::get_le<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = detail::get_le<std::uint32_t>(in, pos);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = detail::get_le<std::uint32_t>(in, pos);
    if (pos + len > in.size()) throw DataError("checkpoint: truncated tensor name");
    std::string name(reinterpret_cast<const char*>(in.data() + pos), len);
    pos += len;
    const auto rows = detail::get_le<std::uint64_t>(in, pos);
    const auto cols = detail::get_le<std::uint64_t>(in, pos);
    if (rows != 0 && cols > (in.size() - pos) / 8 / rows) throw DataError("checkpoint: truncated payload for " + name);
    Mat m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = detail::get_le<double>(in, pos);
    out.push_back({std::move(name), std::move(m)});
  }
  if (pos != in.size()) throw DataError("checkpoint: trailing bytes");
  return out;
}

inline void write_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("checkpoint: write failed for " + path);
}

inline std::vector<NamedTensor> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

inline std::vector<NamedTensor> snapshot_params(const ParamStore& store) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < store.size(); ++i) out.push_back({store[i].name, store[i].value});
  return out;
}

/// Copy tensors into same-named params. Every param must be present with a matching shape.
inline void load_params(ParamStore& store, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Mat*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DataError("checkpoint: missing tensor " + p.name);
    if (!it->second->same_shape(p.value))
      throw ShapeError("checkpoint: tensor " + p.name + " is " + it->second->shape_str() + ", expected " +
                       p.value.shape_str());
    p.value = *it->second;
  }
}

}  // namespace graphshield

#pragma once

// Binary checkpoint: "ELS2", u32 version, u32 Lmax/n_lat/n_lon, f64 t,
// psi (n values), then d as three component blocks; little-endian throughout.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "els2/error.hpp"
#include "els2/sphere.hpp"

namespace els2 {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  double t = 0.0;
  ScalarField psi;
  VectorField d;
};

namespace detail {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    v = to_little(v);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string path) : buf_(std::move(bytes)), path_(std::move(path)) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > buf_.size()) {
      throw Error(ErrorKind::io, path_ + ": truncated checkpoint reading " + what + " at offset " +
                                     std::to_string(pos_));
    }
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::size_t offset() const { return pos_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<char> buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Writes atomically through a sibling temporary file.
inline void write_checkpoint(const CheckpointData& cp, const std::filesystem::path& path) {
  const auto& g = *cp.psi.grid;
  detail::require_same(g, *cp.d.grid);
  detail::ByteWriter w;
  for (char c : {'E', 'L', 'S', '2'}) w.put(c);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(g.lmax()));
  w.put(static_cast<std::uint32_t>(g.n_lat()));
  w.put(static_cast<std::uint32_t>(g.n_lon()));
  w.put(cp.t);
  for (double v : cp.psi.values) w.put(v);
  for (int c = 0; c < 3; ++c)
    for (const auto& v : cp.d.values) w.put(v[c]);

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw Error(ErrorKind::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot move checkpoint into " + path.string() + ": " + ec.message());
}

/// Reads a checkpoint; when `grid` is given the stored dimensions must match it.
inline CheckpointData read_checkpoint(const std::filesystem::path& path, GridPtr grid = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(std::move(bytes), path.string());

  char magic[4];
  for (char& c : magic) c = r.get<char>("magic");
  if (std::memcmp(magic, "ELS2", 4) != 0) {
    throw Error(ErrorKind::io, path.string() + ": bad magic at offset 0");
  }
  const auto version_offset = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::io, path.string() + ": unsupported version " + std::to_string(version) + " at offset " +
                                   std::to_string(version_offset));
  }
  const auto dims_offset = r.offset();
  const auto lmax = r.get<std::uint32_t>("Lmax");
  const auto n_lat = r.get<std::uint32_t>("n_lat");
  const auto n_lon = r.get<std::uint32_t>("n_lon");
  if (!grid) {
    if (lmax < 4 || lmax > 1024) {
      throw Error(ErrorKind::io, path.string() + ": implausible Lmax " + std::to_string(lmax) + " at offset " +
                                     std::to_string(dims_offset));
    }
    grid = build_grid(static_cast<int>(lmax));
  }
  if (static_cast<int>(lmax) != grid->lmax() || static_cast<int>(n_lat) != grid->n_lat() ||
      static_cast<int>(n_lon) != grid->n_lon()) {
    throw Error(ErrorKind::io, path.string() + ": dimension mismatch at offset " + std::to_string(dims_offset) +
                                   " (file Lmax=" + std::to_string(lmax) + " " + std::to_string(n_lat) + "x" +
                                   std::to_string(n_lon) + ", active Lmax=" + std::to_string(grid->lmax()) + ")");
  }
  const std::size_t expected = r.offset() + sizeof(double) * (1 + 4 * grid->size());
  if (r.size() != expected) {
    throw Error(ErrorKind::io, path.string() + ": length " + std::to_string(r.size()) + " differs from expected " +
                                   std::to_string(expected) + " at offset " + std::to_string(r.offset()));
  }

  CheckpointData cp;
  cp.t = r.get<double>("t");
  cp.psi = ScalarField(grid);
  for (auto& v : cp.psi.values) v = r.get<double>("psi");
  cp.d = VectorField(grid);
  for (int c = 0; c < 3; ++c)
    for (auto& v : cp.d.values) v[c] = r.get<double>("d");
  return cp;
}

}  // namespace els2

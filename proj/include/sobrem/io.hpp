#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sobrem/grid.hpp"

namespace sobrem {

/// File-system or format failure while reading or writing an artifact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raster contents of a PGM or run-length file.
struct RasterFile {
  int dim = 2;
  Index counts{1, 1, 1};
  double h = 1.0;
  std::vector<std::uint8_t> mask;
};

// PGM: 8-bit binary graymap, marked cells 255, row-major with axis 0 fastest,
// first row at the minimum corner. 3-D grids stack z-slices vertically.

inline std::string to_pgm(const GridSet& k) {
  const auto& g = k.geometry();
  const auto w = g.count(0);
  const auto hgt = g.count(1) * g.count(2);
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(hgt) + "\n255\n";
  out.reserve(out.size() + k.mask().size());
  for (auto m : k.mask()) out.push_back(static_cast<char>(m ? 255 : 0));
  return out;
}

inline RasterFile parse_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw IoError("not a PGM file");
  auto next_int = [&]() {
    while (in >> std::ws && in.peek() == '#') {
      std::string line;
      std::getline(in, line);
    }
    long v = 0;
    if (!(in >> v) || v <= 0) throw IoError("malformed PGM header");
    return v;
  };
  const long w = next_int();
  const long hgt = next_int();
  const long maxval = next_int();
  if (maxval > 255) throw IoError("only 8-bit PGM is supported");
  RasterFile r;
  r.dim = 2;
  r.counts = {w, hgt, 1};
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(hgt);
  r.mask.resize(n);
  const int threshold = (static_cast<int>(maxval) + 1) / 2;
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    std::vector<char> buf(n);
    if (!in.read(buf.data(), static_cast<std::streamsize>(n))) throw IoError("truncated PGM data");
    for (std::size_t i = 0; i < n; ++i)
      r.mask[i] = static_cast<unsigned char>(buf[i]) >= threshold;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      int v = 0;
      if (!(in >> v)) throw IoError("truncated PGM data");
      r.mask[i] = v >= threshold;
    }
  }
  return r;
}

// Run-length format. 16-byte little-endian header:
//   byte 0      magic 0xB1
//   byte 1      dimension N
//   bytes 2-7   cell counts per axis, three uint16 (unused axes = 1)
//   bytes 8-15  cell size h, IEEE-754 binary64
// Body: alternating run lengths, unmarked first, as unsigned LEB128 varints.

inline constexpr std::uint8_t kRleMagic = 0xB1;

namespace detail {
inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}
}  // namespace detail

inline std::string to_rle(const GridSet& k) {
  const auto& g = k.geometry();
  std::string out;
  out.push_back(static_cast<char>(kRleMagic));
  out.push_back(static_cast<char>(g.dim()));
  for (int a = 0; a < kMaxDim; ++a) {
    if (g.count(a) > 0xFFFF) throw IoError("run-length format limits axes to 65535 cells");
    detail::put_le(out, static_cast<std::uint64_t>(g.count(a)), 2);
  }
  detail::put_le(out, std::bit_cast<std::uint64_t>(g.hd()), 8);

  const auto mask = k.mask();
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  auto flush = [&] {
    std::uint64_t v = run;
    do {
      std::uint8_t byte = v & 0x7F;
      v >>= 7;
      if (v) byte |= 0x80;
      out.push_back(static_cast<char>(byte));
    } while (v);
  };
  for (auto m : mask) {
    if (m != current) {
      flush();
      current = m;
      run = 0;
    }
    ++run;
  }
  flush();
  return out;
}

inline RasterFile parse_rle(const std::string& in) {
  if (in.size() < 16 || static_cast<unsigned char>(in[0]) != kRleMagic)
    throw IoError("not a run-length raster");
  RasterFile r;
  r.dim = static_cast<unsigned char>(in[1]);
  if (r.dim < 1 || r.dim > kMaxDim) throw IoError("run-length raster has invalid dimension");
  std::size_t total = 1;
  for (int a = 0; a < kMaxDim; ++a) {
    r.counts[a] = static_cast<std::int64_t>(detail::get_le(in, 2 + 2 * a, 2));
    if (r.counts[a] == 0) throw IoError("run-length raster has an empty axis");
    total *= static_cast<std::size_t>(r.counts[a]);
  }
  r.h = std::bit_cast<double>(detail::get_le(in, 8, 8));
  r.mask.reserve(total);
  std::size_t pos = 16;
  std::uint8_t current = 0;
  while (pos < in.size()) {
    std::uint64_t v = 0;
    int shift = 0;
    while (true) {
      if (pos >= in.size() || shift > 56) throw IoError("truncated run-length varint");
      const auto byte = static_cast<unsigned char>(in[pos++]);
      v |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
      shift += 7;
      if (!(byte & 0x80)) break;
    }
    if (r.mask.size() + v > total) throw IoError("run-length data overruns the grid");
    r.mask.insert(r.mask.end(), v, current);
    current ^= 1;
  }
  if (r.mask.size() != total) throw IoError("run-length data does not cover the grid");
  return r;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to '" + path + "'");
}

/// Loads a raster file, detecting the format from its first bytes. The
/// geometry of the result has origin 0 and cell size 1.
inline GridSet read_raster(const std::string& path) {
  const std::string bytes = read_file(path);
  const RasterFile r = !bytes.empty() && static_cast<unsigned char>(bytes[0]) == kRleMagic
                           ? parse_rle(bytes)
                           : parse_pgm(bytes);
  std::vector<Rational> lo(static_cast<std::size_t>(r.dim), Rational(0));
  std::vector<Rational> hi;
  for (int a = 0; a < r.dim; ++a) hi.emplace_back(r.counts[a]);
  return GridSet(GridGeometry(lo, hi, Rational(1)), r.mask);
}

}  // namespace sobrem

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace ufb {

/*!
  UFBG grid dump. Layout (all little-endian):
    "UFBG" | u32 version | u32 dim | u32 count[dim] | f64 (lo, hi)[dim] |
    f64 values[count_0 * ... * count_{dim-1}], axis 0 slowest.
  Only the samples and the grid are stored; metadata goes in the sidecar.
*/
inline constexpr std::uint32_t ufbg_version = 1;

namespace detail {
inline void put_u32(std::vector<unsigned char> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put_f64(std::vector<unsigned char> &out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

struct Reader {
  const std::vector<unsigned char> &buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (buf.size() - pos < n)
      throw FormatError("UFBG: truncated data");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
};
} // namespace detail

inline std::vector<unsigned char> encode_ufbg(const GridField &f) {
  const Grid &g = f.grid;
  if (f.values.size() != g.size())
    throw InvalidInput("UFBG: value count does not match the grid");
  std::vector<unsigned char> out{'U', 'F', 'B', 'G'};
  out.reserve(16 + 20 * g.dim + 8 * f.values.size());
  detail::put_u32(out, ufbg_version);
  detail::put_u32(out, static_cast<std::uint32_t>(g.dim));
  for (int a = 0; a < g.dim; ++a)
    detail::put_u32(out, static_cast<std::uint32_t>(g.count[a]));
  for (int a = 0; a < g.dim; ++a) {
    detail::put_f64(out, g.lo[a]);
    detail::put_f64(out, g.hi[a]);
  }
  for (double v : f.values)
    detail::put_f64(out, v);
  return out;
}

inline GridField decode_ufbg(const std::vector<unsigned char> &buf) {
  if (buf.size() < 4 || std::memcmp(buf.data(), "UFBG", 4) != 0)
    throw FormatError("UFBG: bad magic");
  detail::Reader r{buf, 4};
  const auto version = r.u32();
  if (version != ufbg_version)
    throw FormatError("UFBG: unsupported version " + std::to_string(version));
  const auto dim = r.u32();
  if (dim != 2 && dim != 3)
    throw FormatError("UFBG: dimension must be 2 or 3");
  Grid g;
  g.dim = static_cast<int>(dim);
  for (int a = 0; a < g.dim; ++a) {
    const auto c = r.u32();
    if (c < 2 || c > (1u << 20))
      throw FormatError("UFBG: implausible node count");
    g.count[a] = static_cast<int>(c);
  }
  for (int a = 0; a < g.dim; ++a) {
    g.lo[a] = r.f64();
    g.hi[a] = r.f64();
    if (!(g.hi[a] > g.lo[a]))
      throw FormatError("UFBG: empty axis range");
  }
  GridField f(g);
  r.need(8 * f.values.size());
  for (auto &v : f.values)
    v = r.f64();
  if (r.pos != buf.size())
    throw FormatError("UFBG: trailing bytes");
  return f;
}

inline void write_ufbg(const std::string &path, const GridField &f) {
  const auto bytes = encode_ufbg(f);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw Error("cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char *>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os)
    throw Error("write to '" + path + "' failed");
}

inline GridField read_ufbg(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw Error("cannot open '" + path + "'");
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(is),
                                   std::istreambuf_iterator<char>()};
  return decode_ufbg(bytes);
}

} // namespace ufb

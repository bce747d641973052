#pragma once

// Little-endian helpers shared by the matrix and embedding-space files.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "userscope/error.hpp"

namespace userscope::binio {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

inline void check(std::istream& in) {
  if (!in) throw Error("MALFORMED_FILE", "unexpected end of file");
}

inline void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

inline std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  check(in);
  return v;
}

inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  check(in);
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto len = get_u32(in);
  if (len > (1u << 20)) throw Error("MALFORMED_FILE", "implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  check(in);
  return s;
}

inline void put_floats(std::ostream& out, const float* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
}

inline void get_floats(std::istream& in, float* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
  check(in);
}

}  // namespace userscope::binio

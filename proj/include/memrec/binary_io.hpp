#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "memrec/errors.hpp"

// Little-endian primitives for checkpoint files.
namespace memrec::binio {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw DataError("checkpoint write failed");
}

inline void read_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw DataError("checkpoint truncated");
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

template <typename T>
[[nodiscard]] T read_pod(std::istream& in) {
  T v{};
  read_bytes(in, &v, sizeof(T));
  return v;
}

template <typename T>
void write_span(std::ostream& out, std::span<const T> values) {
  write_bytes(out, values.data(), values.size_bytes());
}

template <typename T>
void read_span(std::istream& in, std::span<T> values) {
  read_bytes(in, values.data(), values.size_bytes());
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

[[nodiscard]] inline std::string read_string(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  read_bytes(in, s.data(), n);
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4];
  read_bytes(in, got, 4);
  if (std::memcmp(got, magic, 4) != 0) throw DataError(std::string("bad checkpoint magic, expected ") + magic);
}

}  // namespace memrec::binio

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace memrec {

// 64-bit finalizer from MurmurHash3. Bijective, full avalanche.
[[nodiscard]] constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

// Seed derivation: mixes a master seed with a small integer tag.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
  return fmix64(master ^ fmix64(tag + 0x9e3779b97f4a7c15ULL));
}

// Seeded 64-bit hash of an arbitrary byte string.
[[nodiscard]] std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed) noexcept;

// Maps a 64-bit hash uniformly onto [0, range) by multiply-high.
[[nodiscard]] inline std::uint32_t reduce_range(std::uint64_t h, std::uint32_t range) noexcept {
  return static_cast<std::uint32_t>((static_cast<unsigned __int128>(h) * range) >> 64);
}

/// A family of independently seeded hash functions h_1..h_n, each mapping a
/// (field id, token) key onto [0, range). Immutable once built.
class HashFamily {
 public:
  HashFamily(std::size_t num_funcs, std::uint64_t range, std::uint64_t master_seed);

  [[nodiscard]] std::size_t num_funcs() const noexcept { return seeds_.size(); }
  [[nodiscard]] std::uint32_t range() const noexcept { return range_; }
  [[nodiscard]] std::span<const std::uint64_t> seeds() const noexcept { return seeds_; }

  // Index produced by function `func` alone (no dedup).
  [[nodiscard]] std::uint32_t index(std::size_t func, std::uint16_t field_id, std::string_view token) const;

  // Sorted, deduplicated set of the indices produced by all functions.
  [[nodiscard]] std::vector<std::uint32_t> hash_token(std::uint16_t field_id, std::string_view token) const;

  bool operator==(const HashFamily&) const = default;

 private:
  std::uint32_t range_;
  std::vector<std::uint64_t> seeds_;
};

[[nodiscard]] HashFamily make_family(std::size_t num_funcs, std::uint64_t range, std::uint64_t master_seed);

// Two-byte little-endian field prefix followed by the token bytes.
[[nodiscard]] std::string make_key(std::uint16_t field_id, std::string_view token);

}  // namespace memrec

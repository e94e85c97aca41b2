#include "memrec/hashing.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "memrec/errors.hpp"

namespace memrec {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t load_le(const char* p, std::size_t n) noexcept {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed) noexcept {
  const std::size_t len = bytes.size();
  std::uint64_t h = fmix64(seed + kGamma * (len + 1));
  std::size_t pos = 0;
  for (; pos + 8 <= len; pos += 8) {
    h = fmix64(h ^ load_le(bytes.data() + pos, 8)) + kGamma;
  }
  const std::uint64_t tail = load_le(bytes.data() + pos, len - pos);
  return fmix64(h ^ tail ^ (static_cast<std::uint64_t>(len) << 56));
}

std::string make_key(std::uint16_t field_id, std::string_view token) {
  std::string key;
  key.reserve(2 + token.size());
  key.push_back(static_cast<char>(field_id & 0xff));
  key.push_back(static_cast<char>(field_id >> 8));
  key.append(token);
  return key;
}

HashFamily::HashFamily(std::size_t num_funcs, std::uint64_t range, std::uint64_t master_seed) {
  if (num_funcs == 0) throw ConfigError("hash family needs at least one function");
  if (range == 0) throw ConfigError("hash family range must be positive");
  if (range > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("hash family range exceeds 32-bit index space: " + std::to_string(range));
  }
  range_ = static_cast<std::uint32_t>(range);
  seeds_.reserve(num_funcs);
  std::uint64_t tag = 0;
  while (seeds_.size() < num_funcs) {
    const std::uint64_t s = derive_seed(master_seed, tag++);
    if (std::find(seeds_.begin(), seeds_.end(), s) == seeds_.end()) seeds_.push_back(s);
  }
}

std::uint32_t HashFamily::index(std::size_t func, std::uint16_t field_id, std::string_view token) const {
  const std::string key = make_key(field_id, token);
  return reduce_range(hash_bytes(key, seeds_.at(func)), range_);
}

std::vector<std::uint32_t> HashFamily::hash_token(std::uint16_t field_id, std::string_view token) const {
  const std::string key = make_key(field_id, token);
  std::vector<std::uint32_t> out;
  out.reserve(seeds_.size());
  for (const std::uint64_t s : seeds_) out.push_back(reduce_range(hash_bytes(key, s), range_));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HashFamily make_family(std::size_t num_funcs, std::uint64_t range, std::uint64_t master_seed) {
  return HashFamily(num_funcs, range, master_seed);
}

}  // namespace memrec

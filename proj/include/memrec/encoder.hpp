#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memrec/hashing.hpp"

namespace memrec {

/// Hyperparameters of the dual Bloom encoding. Every table shape follows
/// from these: token table d x l, weight table d'.
struct EncoderConfig {
  std::size_t k = 2;         // token hash count
  std::size_t k_prime = 2;   // weight hash count
  std::size_t d = 4096;      // token Bloom length / token table rows
  std::size_t d_prime = 4096;
  std::size_t l = 16;        // embedding length
  std::uint64_t hash_seed = 0;

  // Throws ConfigError unless all fields are positive, k <= d and k' <= d'.
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

// Sparse Bloom bit-vector: the sorted set of active positions in [0, range).
// range == 0 marks an empty signature not yet bound to any table.
template <typename Tag>
struct BloomSignature {
  std::vector<std::uint32_t> indices;
  std::uint32_t range = 0;

  [[nodiscard]] bool empty() const noexcept { return indices.empty(); }
  [[nodiscard]] std::size_t popcount() const noexcept { return indices.size(); }
  bool operator==(const BloomSignature&) const = default;
};

struct TokenTag {};
struct WeightTag {};
using TokenSignature = BloomSignature<TokenTag>;
using WeightSignature = BloomSignature<WeightTag>;

// Domain tags separating the token family from the weight family.
inline constexpr std::uint64_t kTokenFamilyTag = 0x746f6b656eULL;
inline constexpr std::uint64_t kWeightFamilyTag = 0x776569676874ULL;

/// Holds both hash families for one EncoderConfig.
class Encoder {
 public:
  explicit Encoder(const EncoderConfig& cfg);

  [[nodiscard]] const EncoderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const HashFamily& token_family() const noexcept { return token_family_; }
  [[nodiscard]] const HashFamily& weight_family() const noexcept { return weight_family_; }

  [[nodiscard]] TokenSignature encode_token(std::uint16_t field_id, std::string_view token) const;
  [[nodiscard]] WeightSignature encode_weight(std::uint16_t field_id, std::string_view token) const;

  // Union-pooled signatures for a multi-token feature. Empty input yields
  // empty signatures bound to the configured ranges.
  [[nodiscard]] TokenSignature encode_feature(std::uint16_t field_id, std::span<const std::string> tokens) const;
  [[nodiscard]] WeightSignature encode_feature_weight(std::uint16_t field_id,
                                                      std::span<const std::string> tokens) const;

 private:
  EncoderConfig cfg_;
  HashFamily token_family_;
  HashFamily weight_family_;
};

[[nodiscard]] TokenSignature encode_token(const EncoderConfig& cfg, std::uint16_t field_id, std::string_view token);
[[nodiscard]] WeightSignature encode_weight(const EncoderConfig& cfg, std::uint16_t field_id, std::string_view token);

// Elementwise max of the bit-vectors, i.e. set union. Throws InvalidArgument
// when the inputs were drawn from different ranges.
template <typename Tag>
[[nodiscard]] BloomSignature<Tag> pool_signatures(std::span<const BloomSignature<Tag>> sigs);

template <typename Tag>
[[nodiscard]] BloomSignature<Tag> pool_signatures(const std::vector<BloomSignature<Tag>>& sigs) {
  return pool_signatures(std::span<const BloomSignature<Tag>>(sigs));
}

// Characteristic vector of the signature. Throws std::out_of_range if an
// index does not fit.
template <typename Tag>
[[nodiscard]] std::vector<std::uint8_t> densify(const BloomSignature<Tag>& sig, std::size_t range);

template <typename Tag>
[[nodiscard]] BloomSignature<Tag> sparsify(std::span<const std::uint8_t> bits);

}  // namespace memrec

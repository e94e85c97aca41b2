#include "memrec/encoder.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "memrec/errors.hpp"

namespace memrec {

void EncoderConfig::validate() const {
  if (k == 0 || k_prime == 0 || d == 0 || d_prime == 0 || l == 0) {
    throw ConfigError("encoder config fields k, k_prime, d, d_prime, l must all be positive");
  }
  if (k > d) throw ConfigError("k (" + std::to_string(k) + ") exceeds d (" + std::to_string(d) + ")");
  if (k_prime > d_prime) {
    throw ConfigError("k_prime (" + std::to_string(k_prime) + ") exceeds d_prime (" + std::to_string(d_prime) + ")");
  }
}

namespace {

const EncoderConfig& validated(const EncoderConfig& cfg) {
  cfg.validate();
  return cfg;
}

template <typename Tag>
BloomSignature<Tag> from_family(const HashFamily& family, std::uint16_t field_id, std::string_view token) {
  return BloomSignature<Tag>{family.hash_token(field_id, token), family.range()};
}

template <typename Tag>
BloomSignature<Tag> pool_tokens(const HashFamily& family, std::uint16_t field_id, std::span<const std::string> tokens) {
  BloomSignature<Tag> out;
  out.range = family.range();
  if (tokens.size() == 1) {
    out.indices = family.hash_token(field_id, tokens.front());
    return out;
  }
  for (const auto& token : tokens) {
    const auto idx = family.hash_token(field_id, token);
    out.indices.insert(out.indices.end(), idx.begin(), idx.end());
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  return out;
}

}  // namespace

Encoder::Encoder(const EncoderConfig& cfg)
    : cfg_(validated(cfg)),
      token_family_(cfg.k, cfg.d, derive_seed(cfg.hash_seed, kTokenFamilyTag)),
      weight_family_(cfg.k_prime, cfg.d_prime, derive_seed(cfg.hash_seed, kWeightFamilyTag)) {}

TokenSignature Encoder::encode_token(std::uint16_t field_id, std::string_view token) const {
  return from_family<TokenTag>(token_family_, field_id, token);
}

WeightSignature Encoder::encode_weight(std::uint16_t field_id, std::string_view token) const {
  return from_family<WeightTag>(weight_family_, field_id, token);
}

TokenSignature Encoder::encode_feature(std::uint16_t field_id, std::span<const std::string> tokens) const {
  return pool_tokens<TokenTag>(token_family_, field_id, tokens);
}

WeightSignature Encoder::encode_feature_weight(std::uint16_t field_id, std::span<const std::string> tokens) const {
  return pool_tokens<WeightTag>(weight_family_, field_id, tokens);
}

TokenSignature encode_token(const EncoderConfig& cfg, std::uint16_t field_id, std::string_view token) {
  return Encoder(cfg).encode_token(field_id, token);
}

WeightSignature encode_weight(const EncoderConfig& cfg, std::uint16_t field_id, std::string_view token) {
  return Encoder(cfg).encode_weight(field_id, token);
}

template <typename Tag>
BloomSignature<Tag> pool_signatures(std::span<const BloomSignature<Tag>> sigs) {
  BloomSignature<Tag> out;
  if (sigs.empty()) return out;
  out.range = sigs.front().range;
  for (const auto& s : sigs) {
    if (s.range != out.range) {
      throw InvalidArgument("cannot pool signatures of ranges " + std::to_string(out.range) + " and " +
                            std::to_string(s.range));
    }
    out.indices.insert(out.indices.end(), s.indices.begin(), s.indices.end());
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  return out;
}

template <typename Tag>
std::vector<std::uint8_t> densify(const BloomSignature<Tag>& sig, std::size_t range) {
  std::vector<std::uint8_t> bits(range, 0);
  for (const auto j : sig.indices) {
    if (j >= range) {
      throw std::out_of_range("signature index " + std::to_string(j) + " outside range " + std::to_string(range));
    }
    bits[j] = 1;
  }
  return bits;
}

template <typename Tag>
BloomSignature<Tag> sparsify(std::span<const std::uint8_t> bits) {
  BloomSignature<Tag> out;
  out.range = static_cast<std::uint32_t>(bits.size());
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j] != 0) out.indices.push_back(static_cast<std::uint32_t>(j));
  }
  return out;
}

template TokenSignature pool_signatures(std::span<const TokenSignature>);
template WeightSignature pool_signatures(std::span<const WeightSignature>);
template std::vector<std::uint8_t> densify(const TokenSignature&, std::size_t);
template std::vector<std::uint8_t> densify(const WeightSignature&, std::size_t);
template TokenSignature sparsify(std::span<const std::uint8_t>);
template WeightSignature sparsify(std::span<const std::uint8_t>);

}  // namespace memrec

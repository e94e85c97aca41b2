#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memrec/embedding.hpp"
#include "memrec/encoder.hpp"

namespace memrec {

// Mann-Whitney ROC-AUC with ties counted 1/2, via rank sums in O(n log n).
// Throws InvalidArgument unless both classes are present.
[[nodiscard]] double roc_auc(std::span<const double> scores, std::span<const int> labels);

inline constexpr std::size_t kBytesPerParam = 4;

struct ParamCount {
  std::uint64_t embedding_params = 0;
  std::uint64_t mlp_params = 0;
  std::uint64_t total = 0;
  std::uint64_t bytes_at_f32 = 0;
};

// Shapes needed to count a model without building it. `bottom` and `top`
// are full layer-size lists including inputs; empty means no MLP.
struct SchemeConfig {
  EmbeddingConfig embedding;
  std::vector<std::uint64_t> cardinalities;  // per-field alphabet size m_f (full and qr)
  std::vector<std::size_t> bottom;
  std::vector<std::size_t> top;
};

[[nodiscard]] std::uint64_t mlp_param_count(std::span<const std::size_t> sizes);

// full = sum m_f*l; hashtrick = d_ht*l; qr = sum (ceil(m_f/b) + b)*l;
// memrec = d*l + d'. Bytes assume 4 bytes per parameter.
[[nodiscard]] ParamCount count_params(const SchemeConfig& cfg);

// Bytes of `full` over bytes of `compressed`.
[[nodiscard]] double compression_ratio(const SchemeConfig& full, const SchemeConfig& compressed);

struct CollisionStats {
  std::size_t num_tokens = 0;  // distinct tokens analysed
  double mean_popcount = 0.0;
  // histogram[c] = number of token-table positions set by exactly c tokens.
  std::vector<std::uint64_t> per_bit_load_histogram;
  std::uint64_t total_pairs = 0;
  std::uint64_t token_collision_pairs = 0;
  std::uint64_t unresolved_pairs = 0;
  double pair_full_collision_rate = 0.0;  // identical token signature
  double unresolved_pair_rate = 0.0;      // identical token AND weight signature
};

// Analyses distinct tokens of one field (duplicates in `tokens` are dropped).
[[nodiscard]] CollisionStats collision_stats(const EncoderConfig& cfg, std::span<const std::string> tokens,
                                             std::uint16_t field_id = 0);

[[nodiscard]] std::string to_json(const ParamCount& p);
[[nodiscard]] std::string to_json(const CollisionStats& s);

}  // namespace memrec

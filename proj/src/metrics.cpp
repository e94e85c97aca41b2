#include "memrec/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_set>

#include "json.hpp"

#include "memrec/errors.hpp"

namespace memrec {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Tied block [i, j) shares the mean of ranks i+1..j.
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        pos_rank_sum += mean_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("roc_auc undefined: need both positive and negative labels");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::uint64_t mlp_param_count(std::span<const std::size_t> sizes) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) n += sizes[i] * sizes[i + 1] + sizes[i + 1];
  return n;
}

ParamCount count_params(const SchemeConfig& cfg) {
  const auto& e = cfg.embedding;
  const std::uint64_t l = e.encoder.l;
  ParamCount p;
  switch (e.scheme) {
    case EmbeddingScheme::memrec:
      e.encoder.validate();
      p.embedding_params = e.encoder.d * l + e.encoder.d_prime;
      break;
    case EmbeddingScheme::full:
      for (const auto m : cfg.cardinalities) p.embedding_params += m * l;
      break;
    case EmbeddingScheme::hashtrick:
      p.embedding_params = e.hashtrick_rows * l;
      break;
    case EmbeddingScheme::qr:
      if (e.qr_buckets == 0) throw ConfigError("qr_buckets must be positive");
      for (const auto m : cfg.cardinalities) {
        const std::uint64_t mm = std::max<std::uint64_t>(1, m);
        p.embedding_params += ((mm + e.qr_buckets - 1) / e.qr_buckets + e.qr_buckets) * l;
      }
      break;
  }
  p.mlp_params = mlp_param_count(cfg.bottom) + mlp_param_count(cfg.top);
  p.total = p.embedding_params + p.mlp_params;
  p.bytes_at_f32 = p.total * kBytesPerParam;
  return p;
}

double compression_ratio(const SchemeConfig& full, const SchemeConfig& compressed) {
  return static_cast<double>(count_params(full).bytes_at_f32) /
         static_cast<double>(count_params(compressed).bytes_at_f32);
}

CollisionStats collision_stats(const EncoderConfig& cfg, std::span<const std::string> tokens, std::uint16_t field_id) {
  const Encoder encoder(cfg);
  std::vector<std::string> distinct;
  {
    std::unordered_set<std::string> seen;
    for (const auto& t : tokens) {
      if (seen.insert(t).second) distinct.push_back(t);
    }
  }

  CollisionStats s;
  s.num_tokens = distinct.size();
  std::vector<std::uint64_t> load(cfg.d, 0);
  std::map<std::vector<std::uint32_t>, std::uint64_t> by_token;
  std::map<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>, std::uint64_t> by_both;
  double popcount_sum = 0.0;
  for (const auto& t : distinct) {
    auto tsig = encoder.encode_token(field_id, t);
    auto wsig = encoder.encode_weight(field_id, t);
    popcount_sum += static_cast<double>(tsig.popcount());
    for (const auto j : tsig.indices) ++load[j];
    ++by_token[tsig.indices];
    ++by_both[{std::move(tsig.indices), std::move(wsig.indices)}];
  }
  if (s.num_tokens > 0) s.mean_popcount = popcount_sum / static_cast<double>(s.num_tokens);

  const std::uint64_t max_load = load.empty() ? 0 : *std::max_element(load.begin(), load.end());
  s.per_bit_load_histogram.assign(max_load + 1, 0);
  for (const auto c : load) ++s.per_bit_load_histogram[c];

  const auto pairs = [](std::uint64_t n) { return n * (n - (n > 0 ? 1 : 0)) / 2; };
  s.total_pairs = pairs(s.num_tokens);
  for (const auto& [sig, n] : by_token) s.token_collision_pairs += pairs(n);
  for (const auto& [sig, n] : by_both) s.unresolved_pairs += pairs(n);
  if (s.total_pairs > 0) {
    s.pair_full_collision_rate = static_cast<double>(s.token_collision_pairs) / static_cast<double>(s.total_pairs);
    s.unresolved_pair_rate = static_cast<double>(s.unresolved_pairs) / static_cast<double>(s.total_pairs);
  }
  return s;
}

std::string to_json(const ParamCount& p) {
  nlohmann::json j = {{"embedding_params", p.embedding_params},
                      {"mlp_params", p.mlp_params},
                      {"total", p.total},
                      {"bytes_at_f32", p.bytes_at_f32}};
  return j.dump();
}

std::string to_json(const CollisionStats& s) {
  nlohmann::json j = {{"num_tokens", s.num_tokens},
                      {"mean_popcount", s.mean_popcount},
                      {"per_bit_load_histogram", s.per_bit_load_histogram},
                      {"total_pairs", s.total_pairs},
                      {"token_collision_pairs", s.token_collision_pairs},
                      {"unresolved_pairs", s.unresolved_pairs},
                      {"pair_full_collision_rate", s.pair_full_collision_rate},
                      {"unresolved_pair_rate", s.unresolved_pair_rate}};
  return j.dump();
}

}  // namespace memrec

#include "memrec/embedding.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "memrec/errors.hpp"

namespace memrec {

std::string_view to_string(EmbeddingScheme scheme) noexcept {
  switch (scheme) {
    case EmbeddingScheme::memrec: return "memrec";
    case EmbeddingScheme::full: return "full";
    case EmbeddingScheme::hashtrick: return "hashtrick";
    case EmbeddingScheme::qr: return "qr";
  }
  return "unknown";
}

EmbeddingScheme parse_scheme(std::string_view name) {
  for (auto s : {EmbeddingScheme::memrec, EmbeddingScheme::full, EmbeddingScheme::hashtrick, EmbeddingScheme::qr}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown embedding_scheme '" + std::string(name) + "' (expected memrec, full, hashtrick or qr)");
}

void EmbeddingConfig::validate() const {
  if (num_fields == 0) throw ConfigError("num_sparse_fields must be positive");
  if (num_fields > 0xffff) throw ConfigError("num_sparse_fields exceeds the 2-byte field id space");
  switch (scheme) {
    case EmbeddingScheme::memrec: encoder.validate(); break;
    case EmbeddingScheme::hashtrick:
      if (hashtrick_rows == 0) throw ConfigError("hashtrick_rows must be positive");
      [[fallthrough]];
    default:
      if (encoder.l == 0) throw ConfigError("embedding length l must be positive");
  }
  if (scheme == EmbeddingScheme::qr && qr_buckets == 0) throw ConfigError("qr_buckets must be positive");
}

template <typename Real>
std::vector<std::uint32_t> RowGradAccumulator<Real>::touched_rows() const {
  auto rows = touched_list_;
  std::sort(rows.begin(), rows.end());
  return rows;
}

template <typename Real>
void RowGradAccumulator<Real>::clear() {
  for (const auto r : touched_list_) {
    std::fill_n(grad_.begin() + static_cast<std::ptrdiff_t>(r * dim_), dim_, Real(0));
    touched_[r] = 0;
  }
  touched_list_.clear();
}

template <typename Real>
MemRecEmbedding<Real>::MemRecEmbedding(const EncoderConfig& cfg, std::uint64_t init_seed, bool train_weights)
    : encoder_(cfg), train_weights_(train_weights) {
  auto [m, w] = init_tables<Real>(cfg, init_seed);
  tokens_ = std::move(m);
  weights_ = std::move(w);
  token_grad_ = RowGradAccumulator<Real>(cfg.d, cfg.l);
  weight_grad_ = RowGradAccumulator<Real>(cfg.d_prime, 1);
}

template <typename Real>
MemRecEmbedding<Real>::MemRecEmbedding(const EncoderConfig& cfg, TokenTable<Real> tokens, WeightTable<Real> weights,
                                       bool train_weights)
    : encoder_(cfg), tokens_(std::move(tokens)), weights_(std::move(weights)), train_weights_(train_weights) {
  if (tokens_.rows() != cfg.d || tokens_.dim() != cfg.l || weights_.size() != cfg.d_prime) {
    throw ConfigError("table shapes do not match encoder config");
  }
  token_grad_ = RowGradAccumulator<Real>(cfg.d, cfg.l);
  weight_grad_ = RowGradAccumulator<Real>(cfg.d_prime, 1);
}

template <typename Real>
void MemRecEmbedding<Real>::embed(std::uint16_t field, std::span<const std::string> tokens,
                                  std::span<Real> out) const {
  const auto tsig = encoder_.encode_feature(field, tokens);
  const auto wsig = encoder_.encode_feature_weight(field, tokens);
  embed_into(tokens_, weights_, tsig, wsig, out);
}

template <typename Real>
void MemRecEmbedding<Real>::backward(std::uint16_t field, std::span<const std::string> tokens,
                                     std::span<const Real> upstream) {
  const auto tsig = encoder_.encode_feature(field, tokens);
  const auto wsig = encoder_.encode_feature_weight(field, tokens);
  const auto g = embed_backward(tokens_, weights_, tsig, wsig, upstream);
  for (std::size_t n = 0; n < g.token_index.size(); ++n) token_grad_.add(g.token_index[n], g.token_row(n));
  if (train_weights_) {
    for (std::size_t n = 0; n < g.weight_index.size(); ++n) weight_grad_.add_scalar(g.weight_index[n], g.weight_values[n]);
  }
}

template <typename Real>
void MemRecEmbedding<Real>::step(Real lr) {
  EmbeddingGrad<Real> g;
  g.dim = tokens_.dim();
  g.token_index = token_grad_.touched_rows();
  g.token_rows.reserve(g.token_index.size() * g.dim);
  for (const auto r : g.token_index) {
    const auto row = token_grad_.row(r);
    g.token_rows.insert(g.token_rows.end(), row.begin(), row.end());
  }
  g.weight_index = weight_grad_.touched_rows();
  for (const auto i : g.weight_index) g.weight_values.push_back(weight_grad_.row(i)[0]);
  apply_grad(tokens_, weights_, g, lr);
  zero_grad();
}

template <typename Real>
void MemRecEmbedding<Real>::zero_grad() {
  token_grad_.clear();
  weight_grad_.clear();
}

template <typename Real>
std::vector<ParamBlock<Real>> MemRecEmbedding<Real>::parameters() {
  return {{"memrec.token_table", tokens_.data(), token_grad_.data()},
          {"memrec.weight_table", weights_.data(), weight_grad_.data()}};
}

template <typename Real>
void MemRecEmbedding<Real>::save(std::ostream& out) const {
  save_tables(out, encoder_.config(), tokens_, weights_);
}

template <typename Real>
std::unique_ptr<MemRecEmbedding<Real>> MemRecEmbedding<Real>::load(std::istream& in, bool train_weights) {
  EncoderConfig cfg;
  auto [m, w] = load_tables<Real>(in, cfg);
  return std::make_unique<MemRecEmbedding<Real>>(cfg, std::move(m), std::move(w), train_weights);
}

template <typename Real>
std::unique_ptr<EmbeddingProvider<Real>> MemRecEmbedding<Real>::clone() const {
  return std::make_unique<MemRecEmbedding<Real>>(encoder_.config(), tokens_, weights_, train_weights_);
}

template class RowGradAccumulator<float>;
template class RowGradAccumulator<double>;
template class MemRecEmbedding<float>;
template class MemRecEmbedding<double>;

}  // namespace memrec

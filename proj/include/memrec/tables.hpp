#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "memrec/encoder.hpp"

namespace memrec {

/// The d x l token table M. Row j is shared by every token whose signature
/// contains j. Stored row-major.
template <typename Real>
class TokenTable {
 public:
  TokenTable() = default;
  TokenTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, Real(0)) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<Real> row(std::size_t j) { return {data_.data() + j * dim_, dim_}; }
  [[nodiscard]] std::span<const Real> row(std::size_t j) const { return {data_.data() + j * dim_, dim_}; }
  [[nodiscard]] std::span<Real> data() noexcept { return data_; }
  [[nodiscard]] std::span<const Real> data() const noexcept { return data_; }

  bool operator==(const TokenTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<Real> data_;
};

/// The length-d' vector w of trainable scalars.
template <typename Real>
class WeightTable {
 public:
  WeightTable() = default;
  explicit WeightTable(std::size_t size, Real value = Real(0)) : w_(size, value) {}

  [[nodiscard]] std::size_t size() const noexcept { return w_.size(); }
  [[nodiscard]] Real& operator[](std::size_t i) { return w_[i]; }
  [[nodiscard]] Real operator[](std::size_t i) const { return w_[i]; }
  [[nodiscard]] std::span<Real> data() noexcept { return w_; }
  [[nodiscard]] std::span<const Real> data() const noexcept { return w_; }

  bool operator==(const WeightTable&) const = default;

 private:
  std::vector<Real> w_;
};

// Sparse gradient of one embedding: rows keyed by active token index and
// scalars keyed by active weight index. Keys are sorted and unique.
template <typename Real>
struct EmbeddingGrad {
  std::size_t dim = 0;
  std::vector<std::uint32_t> token_index;
  std::vector<Real> token_rows;  // token_index.size() x dim
  std::vector<std::uint32_t> weight_index;
  std::vector<Real> weight_values;

  [[nodiscard]] std::span<const Real> token_row(std::size_t i) const { return {token_rows.data() + i * dim, dim}; }
};

// Fills `values` with i.i.d. draws from the open interval (-bound, bound).
template <typename Real>
void fill_uniform(std::span<Real> values, double bound, std::mt19937_64& rng);

// M ~ U(-1/sqrt(l), 1/sqrt(l)); every w entry = 1/k'.
template <typename Real>
[[nodiscard]] std::pair<TokenTable<Real>, WeightTable<Real>> init_tables(const EncoderConfig& cfg,
                                                                         std::uint64_t init_seed);

// alpha = sum of w over the active weight indices; 0 for an empty signature.
template <typename Real>
[[nodiscard]] Real alpha(const WeightTable<Real>& weights, const WeightSignature& wsig);

// z = alpha(wsig) * sum of the M rows selected by tsig.
template <typename Real>
void embed_into(const TokenTable<Real>& tokens, const WeightTable<Real>& weights, const TokenSignature& tsig,
                const WeightSignature& wsig, std::span<Real> out);

template <typename Real>
[[nodiscard]] std::vector<Real> embed(const TokenTable<Real>& tokens, const WeightTable<Real>& weights,
                                      const TokenSignature& tsig, const WeightSignature& wsig);

// Gradient of g . z with respect to the selected M rows (alpha * g each)
// and the selected w entries (g . r each, r the unscaled row sum).
template <typename Real>
[[nodiscard]] EmbeddingGrad<Real> embed_backward(const TokenTable<Real>& tokens, const WeightTable<Real>& weights,
                                                 const TokenSignature& tsig, const WeightSignature& wsig,
                                                 std::span<const Real> upstream);
template <typename Real>
[[nodiscard]] EmbeddingGrad<Real> embed_backward(const TokenTable<Real>& tokens, const WeightTable<Real>& weights,
                                                 const TokenSignature& tsig, const WeightSignature& wsig,
                                                 const std::vector<Real>& upstream) {
  return embed_backward(tokens, weights, tsig, wsig, std::span<const Real>(upstream));
}

// Plain SGD step on the touched entries only.
template <typename Real>
void apply_grad(TokenTable<Real>& tokens, WeightTable<Real>& weights, const EmbeddingGrad<Real>& grad, Real lr);

// Table checkpoint: "MRTB" magic, version, dtype width, the six encoder
// config fields as u64, then M and w as raw little-endian reals.
template <typename Real>
void save_tables(std::ostream& out, const EncoderConfig& cfg, const TokenTable<Real>& tokens,
                 const WeightTable<Real>& weights);

template <typename Real>
[[nodiscard]] std::pair<TokenTable<Real>, WeightTable<Real>> load_tables(std::istream& in, EncoderConfig& cfg);

}  // namespace memrec

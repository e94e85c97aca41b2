#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memrec/data.hpp"
#include "memrec/embedding.hpp"
#include "memrec/hashing.hpp"
#include "memrec/tables.hpp"

namespace memrec {

// Per-field token lists in first-seen order.
using Vocab = std::vector<std::vector<std::string>>;

[[nodiscard]] Vocab collect_vocab(std::span<const Record> records, std::size_t num_fields);

// Token -> row lookup for one field.
class FieldVocab {
 public:
  FieldVocab() = default;
  explicit FieldVocab(std::vector<std::string> tokens);

  [[nodiscard]] std::optional<std::uint32_t> find(const std::string& token) const;
  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// One row per distinct token per field; the uncompressed reference.
template <typename Real>
struct FullTable {
  FullTable() = default;
  FullTable(const Vocab& vocab, std::size_t dim, std::uint64_t init_seed);

  std::size_t dim = 0;
  std::vector<FieldVocab> vocab;
  std::vector<TokenTable<Real>> tables;
};

/// A single d_ht x l table shared by every field; tokens land on one row
/// chosen by a field-keyed hash.
template <typename Real>
struct HashTrickTable {
  HashTrickTable(std::size_t rows, std::size_t dim, std::uint64_t hash_seed, std::uint64_t init_seed);
  HashTrickTable(HashFamily family, TokenTable<Real> table) : family(std::move(family)), table(std::move(table)) {}

  [[nodiscard]] std::uint32_t row_of(std::uint16_t field, const std::string& token) const {
    return family.index(0, field, token);
  }

  HashFamily family;
  TokenTable<Real> table;
};

/// Quotient-remainder compositional table: id -> Q[id / b] * R[id % b]
/// elementwise, with separate Q and R per field.
template <typename Real>
struct QRTable {
  QRTable() = default;
  QRTable(const Vocab& vocab, std::size_t buckets, std::size_t dim, std::uint64_t init_seed);

  std::size_t buckets = 1;
  std::size_t dim = 0;
  std::vector<FieldVocab> vocab;
  std::vector<TokenTable<Real>> quotient;
  std::vector<TokenTable<Real>> remainder;
};

// Sum of the rows of the listed tokens; unseen tokens contribute zero.
template <typename Real>
[[nodiscard]] std::vector<Real> embed_full(const FullTable<Real>& table, std::uint16_t field,
                                           std::span<const std::string> tokens);

template <typename Real>
[[nodiscard]] std::vector<Real> embed_hashtrick(const HashTrickTable<Real>& table, std::uint16_t field,
                                                std::span<const std::string> tokens);

// Throws std::out_of_range unless token_id < m for the field.
template <typename Real>
[[nodiscard]] std::vector<Real> embed_qr(const QRTable<Real>& table, std::uint16_t field, std::size_t token_id);

// Builds the provider for cfg.scheme. `vocab` is required for full and qr.
template <typename Real>
[[nodiscard]] std::unique_ptr<EmbeddingProvider<Real>> make_embedding(const EmbeddingConfig& cfg,
                                                                      const Vocab* vocab);

template <typename Real>
[[nodiscard]] std::unique_ptr<EmbeddingProvider<Real>> load_embedding(const EmbeddingConfig& cfg, std::istream& in);

}  // namespace memrec

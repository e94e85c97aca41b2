#include "memrec/baselines.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "memrec/binary_io.hpp"
#include "memrec/errors.hpp"

namespace memrec {

Vocab collect_vocab(std::span<const Record> records, std::size_t num_fields) {
  Vocab vocab(num_fields);
  std::vector<std::unordered_set<std::string>> seen(num_fields);
  for (const auto& rec : records) {
    for (std::size_t f = 0; f < std::min(num_fields, rec.sparse.size()); ++f) {
      for (const auto& t : rec.sparse[f]) {
        if (seen[f].insert(t).second) vocab[f].push_back(t);
      }
    }
  }
  return vocab;
}

FieldVocab::FieldVocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      throw InvalidArgument("duplicate token in vocabulary: " + tokens_[i]);
    }
  }
}

std::optional<std::uint32_t> FieldVocab::find(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

double row_bound(std::size_t dim) { return 1.0 / std::sqrt(static_cast<double>(dim)); }

// Q and R entries multiply, so each gets the square root of the usual scale.
double qr_bound(std::size_t dim) { return std::sqrt(row_bound(dim)); }

template <typename Real>
void add_into(std::span<Real> dst, std::span<const Real> src) {
  for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
}

template <typename Real>
void write_table(std::ostream& out, const TokenTable<Real>& t) {
  binio::write_pod<std::uint64_t>(out, t.rows());
  binio::write_span(out, t.data());
}

template <typename Real>
TokenTable<Real> read_table(std::istream& in, std::size_t dim) {
  const auto rows = binio::read_pod<std::uint64_t>(in);
  TokenTable<Real> t(rows, dim);
  binio::read_span(in, t.data());
  return t;
}

void write_vocab(std::ostream& out, const FieldVocab& v) {
  binio::write_pod<std::uint64_t>(out, v.size());
  for (const auto& t : v.tokens()) binio::write_string(out, t);
}

FieldVocab read_vocab(std::istream& in) {
  const auto n = binio::read_pod<std::uint64_t>(in);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(binio::read_string(in));
  return FieldVocab(std::move(tokens));
}

const Vocab& require_vocab(const Vocab* vocab, const EmbeddingConfig& cfg) {
  if (!vocab) throw ConfigError(std::string(to_string(cfg.scheme)) + " embedding needs a vocabulary");
  if (vocab->size() != cfg.num_fields) throw ConfigError("vocabulary field count does not match num_sparse_fields");
  return *vocab;
}

// ---------------------------------------------------------------------------

template <typename Real>
class FullEmbedding final : public EmbeddingProvider<Real> {
 public:
  explicit FullEmbedding(FullTable<Real> table) : table_(std::move(table)) {
    for (const auto& t : table_.tables) grads_.emplace_back(t.rows(), t.dim());
  }

  EmbeddingScheme scheme() const noexcept override { return EmbeddingScheme::full; }
  std::size_t dim() const noexcept override { return table_.dim; }

  void embed(std::uint16_t field, std::span<const std::string> tokens, std::span<Real> out) const override {
    std::fill(out.begin(), out.end(), Real(0));
    for (const auto& t : tokens) {
      if (const auto row = table_.vocab.at(field).find(t)) add_into(out, table_.tables[field].row(*row));
    }
  }

  void backward(std::uint16_t field, std::span<const std::string> tokens, std::span<const Real> upstream) override {
    for (const auto& t : tokens) {
      if (const auto row = table_.vocab.at(field).find(t)) grads_[field].add(*row, upstream);
    }
  }

  void step(Real lr) override {
    for (std::size_t f = 0; f < grads_.size(); ++f) {
      for (const auto r : grads_[f].touched_rows()) {
        auto row = table_.tables[f].row(r);
        const auto g = grads_[f].row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] -= lr * g[c];
      }
    }
    zero_grad();
  }

  void zero_grad() override {
    for (auto& g : grads_) g.clear();
  }

  std::size_t param_count() const override {
    std::size_t n = 0;
    for (const auto& t : table_.tables) n += t.data().size();
    return n;
  }

  std::vector<ParamBlock<Real>> parameters() override {
    std::vector<ParamBlock<Real>> out;
    for (std::size_t f = 0; f < table_.tables.size(); ++f) {
      out.push_back({"full.field" + std::to_string(f), table_.tables[f].data(), grads_[f].data()});
    }
    return out;
  }

  void save(std::ostream& out) const override {
    binio::write_bytes(out, "MRFT", 4);
    binio::write_pod<std::uint64_t>(out, table_.dim);
    binio::write_pod<std::uint64_t>(out, table_.tables.size());
    for (std::size_t f = 0; f < table_.tables.size(); ++f) {
      write_vocab(out, table_.vocab[f]);
      write_table(out, table_.tables[f]);
    }
  }

  static std::unique_ptr<FullEmbedding> load(std::istream& in) {
    binio::expect_magic(in, "MRFT");
    FullTable<Real> table;
    table.dim = binio::read_pod<std::uint64_t>(in);
    const auto fields = binio::read_pod<std::uint64_t>(in);
    for (std::uint64_t f = 0; f < fields; ++f) {
      table.vocab.push_back(read_vocab(in));
      table.tables.push_back(read_table<Real>(in, table.dim));
    }
    return std::make_unique<FullEmbedding>(std::move(table));
  }

  std::unique_ptr<EmbeddingProvider<Real>> clone() const override {
    return std::make_unique<FullEmbedding>(table_);
  }

 private:
  FullTable<Real> table_;
  std::vector<RowGradAccumulator<Real>> grads_;
};

template <typename Real>
class HashTrickEmbedding final : public EmbeddingProvider<Real> {
 public:
  explicit HashTrickEmbedding(HashTrickTable<Real> table)
      : table_(std::move(table)), grad_(table_.table.rows(), table_.table.dim()) {}

  EmbeddingScheme scheme() const noexcept override { return EmbeddingScheme::hashtrick; }
  std::size_t dim() const noexcept override { return table_.table.dim(); }

  void embed(std::uint16_t field, std::span<const std::string> tokens, std::span<Real> out) const override {
    std::fill(out.begin(), out.end(), Real(0));
    for (const auto& t : tokens) add_into(out, table_.table.row(table_.row_of(field, t)));
  }

  void backward(std::uint16_t field, std::span<const std::string> tokens, std::span<const Real> upstream) override {
    for (const auto& t : tokens) grad_.add(table_.row_of(field, t), upstream);
  }

  void step(Real lr) override {
    for (const auto r : grad_.touched_rows()) {
      auto row = table_.table.row(r);
      const auto g = grad_.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] -= lr * g[c];
    }
    zero_grad();
  }

  void zero_grad() override { grad_.clear(); }

  std::size_t param_count() const override { return table_.table.data().size(); }

  std::vector<ParamBlock<Real>> parameters() override {
    return {{"hashtrick.table", table_.table.data(), grad_.data()}};
  }

  void save(std::ostream& out) const override {
    binio::write_bytes(out, "MRHT", 4);
    binio::write_pod<std::uint64_t>(out, table_.table.dim());
    binio::write_pod<std::uint64_t>(out, table_.family.seeds()[0]);
    write_table(out, table_.table);
  }

  static std::unique_ptr<HashTrickEmbedding> load(std::istream& in, std::uint64_t hash_seed) {
    binio::expect_magic(in, "MRHT");
    const auto dim = binio::read_pod<std::uint64_t>(in);
    const auto stored_seed = binio::read_pod<std::uint64_t>(in);
    auto table = read_table<Real>(in, dim);
    HashFamily family(1, table.rows(), derive_seed(hash_seed, kTokenFamilyTag));
    if (family.seeds()[0] != stored_seed) throw DataError("hashing-trick checkpoint seed does not match config");
    return std::make_unique<HashTrickEmbedding>(HashTrickTable<Real>(std::move(family), std::move(table)));
  }

  std::unique_ptr<EmbeddingProvider<Real>> clone() const override {
    return std::make_unique<HashTrickEmbedding>(table_);
  }

 private:
  HashTrickTable<Real> table_;
  RowGradAccumulator<Real> grad_;
};

template <typename Real>
class QREmbedding final : public EmbeddingProvider<Real> {
 public:
  explicit QREmbedding(QRTable<Real> table) : table_(std::move(table)) {
    for (std::size_t f = 0; f < table_.quotient.size(); ++f) {
      qgrad_.emplace_back(table_.quotient[f].rows(), table_.dim);
      rgrad_.emplace_back(table_.remainder[f].rows(), table_.dim);
    }
  }

  EmbeddingScheme scheme() const noexcept override { return EmbeddingScheme::qr; }
  std::size_t dim() const noexcept override { return table_.dim; }

  void embed(std::uint16_t field, std::span<const std::string> tokens, std::span<Real> out) const override {
    std::fill(out.begin(), out.end(), Real(0));
    for (const auto& t : tokens) {
      const auto id = table_.vocab.at(field).find(t);
      if (!id) continue;
      const auto q = table_.quotient[field].row(*id / table_.buckets);
      const auto r = table_.remainder[field].row(*id % table_.buckets);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += q[c] * r[c];
    }
  }

  void backward(std::uint16_t field, std::span<const std::string> tokens, std::span<const Real> upstream) override {
    std::vector<Real> gq(table_.dim), gr(table_.dim);
    for (const auto& t : tokens) {
      const auto id = table_.vocab.at(field).find(t);
      if (!id) continue;
      const auto qi = *id / table_.buckets;
      const auto ri = *id % table_.buckets;
      const auto q = table_.quotient[field].row(qi);
      const auto r = table_.remainder[field].row(ri);
      for (std::size_t c = 0; c < table_.dim; ++c) {
        gq[c] = upstream[c] * r[c];
        gr[c] = upstream[c] * q[c];
      }
      qgrad_[field].add(qi, gq);
      rgrad_[field].add(ri, gr);
    }
  }

  void step(Real lr) override {
    for (std::size_t f = 0; f < qgrad_.size(); ++f) {
      apply(table_.quotient[f], qgrad_[f], lr);
      apply(table_.remainder[f], rgrad_[f], lr);
    }
    zero_grad();
  }

  void zero_grad() override {
    for (auto& g : qgrad_) g.clear();
    for (auto& g : rgrad_) g.clear();
  }

  std::size_t param_count() const override {
    std::size_t n = 0;
    for (std::size_t f = 0; f < table_.quotient.size(); ++f) {
      n += table_.quotient[f].data().size() + table_.remainder[f].data().size();
    }
    return n;
  }

  std::vector<ParamBlock<Real>> parameters() override {
    std::vector<ParamBlock<Real>> out;
    for (std::size_t f = 0; f < table_.quotient.size(); ++f) {
      out.push_back({"qr.quotient" + std::to_string(f), table_.quotient[f].data(), qgrad_[f].data()});
      out.push_back({"qr.remainder" + std::to_string(f), table_.remainder[f].data(), rgrad_[f].data()});
    }
    return out;
  }

  void save(std::ostream& out) const override {
    binio::write_bytes(out, "MRQR", 4);
    binio::write_pod<std::uint64_t>(out, table_.buckets);
    binio::write_pod<std::uint64_t>(out, table_.dim);
    binio::write_pod<std::uint64_t>(out, table_.quotient.size());
    for (std::size_t f = 0; f < table_.quotient.size(); ++f) {
      write_vocab(out, table_.vocab[f]);
      write_table(out, table_.quotient[f]);
      write_table(out, table_.remainder[f]);
    }
  }

  static std::unique_ptr<QREmbedding> load(std::istream& in) {
    binio::expect_magic(in, "MRQR");
    QRTable<Real> table;
    table.buckets = binio::read_pod<std::uint64_t>(in);
    table.dim = binio::read_pod<std::uint64_t>(in);
    const auto fields = binio::read_pod<std::uint64_t>(in);
    for (std::uint64_t f = 0; f < fields; ++f) {
      table.vocab.push_back(read_vocab(in));
      table.quotient.push_back(read_table<Real>(in, table.dim));
      table.remainder.push_back(read_table<Real>(in, table.dim));
    }
    return std::make_unique<QREmbedding>(std::move(table));
  }

  std::unique_ptr<EmbeddingProvider<Real>> clone() const override { return std::make_unique<QREmbedding>(table_); }

 private:
  static void apply(TokenTable<Real>& t, const RowGradAccumulator<Real>& g, Real lr) {
    for (const auto r : g.touched_rows()) {
      auto row = t.row(r);
      const auto gr = g.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] -= lr * gr[c];
    }
  }

  QRTable<Real> table_;
  std::vector<RowGradAccumulator<Real>> qgrad_;
  std::vector<RowGradAccumulator<Real>> rgrad_;
};

}  // namespace

template <typename Real>
FullTable<Real>::FullTable(const Vocab& v, std::size_t dim_, std::uint64_t init_seed) : dim(dim_) {
  std::mt19937_64 rng(init_seed);
  for (const auto& tokens : v) {
    vocab.emplace_back(tokens);
    tables.emplace_back(tokens.size(), dim);
    fill_uniform(tables.back().data(), row_bound(dim), rng);
  }
}

template <typename Real>
HashTrickTable<Real>::HashTrickTable(std::size_t rows, std::size_t dim, std::uint64_t hash_seed,
                                     std::uint64_t init_seed)
    : family(1, rows, derive_seed(hash_seed, kTokenFamilyTag)), table(rows, dim) {
  std::mt19937_64 rng(init_seed);
  fill_uniform(table.data(), row_bound(dim), rng);
}

template <typename Real>
QRTable<Real>::QRTable(const Vocab& v, std::size_t buckets_, std::size_t dim_, std::uint64_t init_seed)
    : buckets(buckets_), dim(dim_) {
  if (buckets == 0) throw ConfigError("qr_buckets must be positive");
  std::mt19937_64 rng(init_seed);
  for (const auto& tokens : v) {
    vocab.emplace_back(tokens);
    const std::size_t m = std::max<std::size_t>(1, tokens.size());
    quotient.emplace_back((m + buckets - 1) / buckets, dim);
    remainder.emplace_back(buckets, dim);
    fill_uniform(quotient.back().data(), qr_bound(dim), rng);
    fill_uniform(remainder.back().data(), qr_bound(dim), rng);
  }
}

template <typename Real>
std::vector<Real> embed_full(const FullTable<Real>& table, std::uint16_t field, std::span<const std::string> tokens) {
  std::vector<Real> out(table.dim, Real(0));
  for (const auto& t : tokens) {
    if (const auto row = table.vocab.at(field).find(t)) add_into(std::span<Real>(out), table.tables[field].row(*row));
  }
  return out;
}

template <typename Real>
std::vector<Real> embed_hashtrick(const HashTrickTable<Real>& table, std::uint16_t field,
                                  std::span<const std::string> tokens) {
  std::vector<Real> out(table.table.dim(), Real(0));
  for (const auto& t : tokens) add_into(std::span<Real>(out), table.table.row(table.row_of(field, t)));
  return out;
}

template <typename Real>
std::vector<Real> embed_qr(const QRTable<Real>& table, std::uint16_t field, std::size_t token_id) {
  const std::size_t m = table.vocab.at(field).size();
  if (token_id >= m) {
    throw std::out_of_range("token id " + std::to_string(token_id) + " outside alphabet of " + std::to_string(m));
  }
  const auto q = table.quotient[field].row(token_id / table.buckets);
  const auto r = table.remainder[field].row(token_id % table.buckets);
  std::vector<Real> out(table.dim);
  for (std::size_t c = 0; c < table.dim; ++c) out[c] = q[c] * r[c];
  return out;
}

template <typename Real>
std::unique_ptr<EmbeddingProvider<Real>> make_embedding(const EmbeddingConfig& cfg, const Vocab* vocab) {
  cfg.validate();
  const std::size_t dim = cfg.encoder.l;
  switch (cfg.scheme) {
    case EmbeddingScheme::memrec:
      return std::make_unique<MemRecEmbedding<Real>>(cfg.encoder, cfg.init_seed, cfg.train_weights);
    case EmbeddingScheme::full:
      return std::make_unique<FullEmbedding<Real>>(FullTable<Real>(require_vocab(vocab, cfg), dim, cfg.init_seed));
    case EmbeddingScheme::hashtrick:
      return std::make_unique<HashTrickEmbedding<Real>>(
          HashTrickTable<Real>(cfg.hashtrick_rows, dim, cfg.encoder.hash_seed, cfg.init_seed));
    case EmbeddingScheme::qr:
      return std::make_unique<QREmbedding<Real>>(
          QRTable<Real>(require_vocab(vocab, cfg), cfg.qr_buckets, dim, cfg.init_seed));
  }
  throw ConfigError("unknown embedding scheme");
}

template <typename Real>
std::unique_ptr<EmbeddingProvider<Real>> load_embedding(const EmbeddingConfig& cfg, std::istream& in) {
  switch (cfg.scheme) {
    case EmbeddingScheme::memrec: return MemRecEmbedding<Real>::load(in, cfg.train_weights);
    case EmbeddingScheme::full: return FullEmbedding<Real>::load(in);
    case EmbeddingScheme::hashtrick: return HashTrickEmbedding<Real>::load(in, cfg.encoder.hash_seed);
    case EmbeddingScheme::qr: return QREmbedding<Real>::load(in);
  }
  throw DataError("unknown embedding scheme in checkpoint");
}

#define MEMREC_INSTANTIATE_BASELINES(Real)                                                                       \
  template struct FullTable<Real>;                                                                               \
  template struct HashTrickTable<Real>;                                                                          \
  template struct QRTable<Real>;                                                                                 \
  template std::vector<Real> embed_full(const FullTable<Real>&, std::uint16_t, std::span<const std::string>);    \
  template std::vector<Real> embed_hashtrick(const HashTrickTable<Real>&, std::uint16_t,                         \
                                             std::span<const std::string>);                                      \
  template std::vector<Real> embed_qr(const QRTable<Real>&, std::uint16_t, std::size_t);                         \
  template std::unique_ptr<EmbeddingProvider<Real>> make_embedding(const EmbeddingConfig&, const Vocab*);        \
  template std::unique_ptr<EmbeddingProvider<Real>> load_embedding(const EmbeddingConfig&, std::istream&);

MEMREC_INSTANTIATE_BASELINES(float)
MEMREC_INSTANTIATE_BASELINES(double)

#undef MEMREC_INSTANTIATE_BASELINES

}  // namespace memrec

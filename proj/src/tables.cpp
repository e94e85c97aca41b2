#include "memrec/tables.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "memrec/binary_io.hpp"
#include "memrec/errors.hpp"

namespace memrec {

namespace {

constexpr std::uint32_t kTablesVersion = 1;

template <typename Real>
void check_ranges(const TokenTable<Real>& tokens, const WeightTable<Real>& weights, const TokenSignature& tsig,
                  const WeightSignature& wsig) {
  for (const auto j : tsig.indices) {
    if (j >= tokens.rows()) {
      throw std::out_of_range("token index " + std::to_string(j) + " outside table of " +
                              std::to_string(tokens.rows()) + " rows");
    }
  }
  for (const auto i : wsig.indices) {
    if (i >= weights.size()) {
      throw std::out_of_range("weight index " + std::to_string(i) + " outside table of " +
                              std::to_string(weights.size()) + " entries");
    }
  }
}

}  // namespace

template <typename Real>
void fill_uniform(std::span<Real> values, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(std::nextafter(-bound, 0.0), bound);
  for (auto& v : values) v = static_cast<Real>(dist(rng));
}

template <typename Real>
std::pair<TokenTable<Real>, WeightTable<Real>> init_tables(const EncoderConfig& cfg, std::uint64_t init_seed) {
  cfg.validate();
  TokenTable<Real> tokens(cfg.d, cfg.l);
  std::mt19937_64 rng(init_seed);
  fill_uniform(tokens.data(), 1.0 / std::sqrt(static_cast<double>(cfg.l)), rng);
  WeightTable<Real> weights(cfg.d_prime, static_cast<Real>(1.0 / static_cast<double>(cfg.k_prime)));
  return {std::move(tokens), std::move(weights)};
}

template <typename Real>
Real alpha(const WeightTable<Real>& weights, const WeightSignature& wsig) {
  Real a = 0;
  for (const auto i : wsig.indices) {
    if (i >= weights.size()) {
      throw std::out_of_range("weight index " + std::to_string(i) + " outside table of " +
                              std::to_string(weights.size()) + " entries");
    }
    a += weights[i];
  }
  return a;
}

template <typename Real>
void embed_into(const TokenTable<Real>& tokens, const WeightTable<Real>& weights, const TokenSignature& tsig,
                const WeightSignature& wsig, std::span<Real> out) {
  check_ranges(tokens, weights, tsig, wsig);
  if (out.size() != tokens.dim()) throw InvalidArgument("embedding output length does not match table width");
  std::fill(out.begin(), out.end(), Real(0));
  for (const auto j : tsig.indices) {
    const auto r = tokens.row(j);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += r[c];
  }
  const Real a = alpha(weights, wsig);
  for (auto& v : out) v *= a;
}

template <typename Real>
std::vector<Real> embed(const TokenTable<Real>& tokens, const WeightTable<Real>& weights, const TokenSignature& tsig,
                        const WeightSignature& wsig) {
  std::vector<Real> z(tokens.dim());
  embed_into(tokens, weights, tsig, wsig, std::span<Real>(z));
  return z;
}

template <typename Real>
EmbeddingGrad<Real> embed_backward(const TokenTable<Real>& tokens, const WeightTable<Real>& weights,
                                   const TokenSignature& tsig, const WeightSignature& wsig,
                                   std::span<const Real> upstream) {
  check_ranges(tokens, weights, tsig, wsig);
  const std::size_t dim = tokens.dim();
  if (upstream.size() != dim) throw InvalidArgument("upstream gradient length does not match table width");

  std::vector<Real> row_sum(dim, Real(0));
  for (const auto j : tsig.indices) {
    const auto r = tokens.row(j);
    for (std::size_t c = 0; c < dim; ++c) row_sum[c] += r[c];
  }
  Real g_dot_r = 0;
  for (std::size_t c = 0; c < dim; ++c) g_dot_r += upstream[c] * row_sum[c];
  const Real a = alpha(weights, wsig);

  EmbeddingGrad<Real> grad;
  grad.dim = dim;
  grad.token_index = tsig.indices;
  grad.token_rows.reserve(tsig.indices.size() * dim);
  for (std::size_t n = 0; n < tsig.indices.size(); ++n) {
    for (std::size_t c = 0; c < dim; ++c) grad.token_rows.push_back(a * upstream[c]);
  }
  grad.weight_index = wsig.indices;
  grad.weight_values.assign(wsig.indices.size(), g_dot_r);
  return grad;
}

template <typename Real>
void apply_grad(TokenTable<Real>& tokens, WeightTable<Real>& weights, const EmbeddingGrad<Real>& grad, Real lr) {
  for (std::size_t n = 0; n < grad.token_index.size(); ++n) {
    auto r = tokens.row(grad.token_index[n]);
    const auto g = grad.token_row(n);
    for (std::size_t c = 0; c < r.size(); ++c) r[c] -= lr * g[c];
  }
  for (std::size_t n = 0; n < grad.weight_index.size(); ++n) {
    weights[grad.weight_index[n]] -= lr * grad.weight_values[n];
  }
}

template <typename Real>
void save_tables(std::ostream& out, const EncoderConfig& cfg, const TokenTable<Real>& tokens,
                 const WeightTable<Real>& weights) {
  binio::write_bytes(out, "MRTB", 4);
  binio::write_pod<std::uint32_t>(out, kTablesVersion);
  binio::write_pod<std::uint32_t>(out, sizeof(Real));
  for (const std::uint64_t v : {std::uint64_t(cfg.k), std::uint64_t(cfg.k_prime), std::uint64_t(cfg.d),
                                std::uint64_t(cfg.d_prime), std::uint64_t(cfg.l), cfg.hash_seed}) {
    binio::write_pod(out, v);
  }
  binio::write_span(out, tokens.data());
  binio::write_span(out, weights.data());
}

template <typename Real>
std::pair<TokenTable<Real>, WeightTable<Real>> load_tables(std::istream& in, EncoderConfig& cfg) {
  binio::expect_magic(in, "MRTB");
  if (binio::read_pod<std::uint32_t>(in) != kTablesVersion) throw DataError("unsupported table checkpoint version");
  if (binio::read_pod<std::uint32_t>(in) != sizeof(Real)) throw DataError("table checkpoint precision mismatch");
  cfg.k = binio::read_pod<std::uint64_t>(in);
  cfg.k_prime = binio::read_pod<std::uint64_t>(in);
  cfg.d = binio::read_pod<std::uint64_t>(in);
  cfg.d_prime = binio::read_pod<std::uint64_t>(in);
  cfg.l = binio::read_pod<std::uint64_t>(in);
  cfg.hash_seed = binio::read_pod<std::uint64_t>(in);
  cfg.validate();
  TokenTable<Real> tokens(cfg.d, cfg.l);
  WeightTable<Real> weights(cfg.d_prime);
  binio::read_span(in, tokens.data());
  binio::read_span(in, weights.data());
  return {std::move(tokens), std::move(weights)};
}

#define MEMREC_INSTANTIATE_TABLES(Real)                                                                          \
  template void fill_uniform(std::span<Real>, double, std::mt19937_64&);                                         \
  template std::pair<TokenTable<Real>, WeightTable<Real>> init_tables(const EncoderConfig&, std::uint64_t);      \
  template Real alpha(const WeightTable<Real>&, const WeightSignature&);                                         \
  template void embed_into(const TokenTable<Real>&, const WeightTable<Real>&, const TokenSignature&,             \
                           const WeightSignature&, std::span<Real>);                                             \
  template std::vector<Real> embed(const TokenTable<Real>&, const WeightTable<Real>&, const TokenSignature&,     \
                                   const WeightSignature&);                                                      \
  template EmbeddingGrad<Real> embed_backward(const TokenTable<Real>&, const WeightTable<Real>&,                 \
                                              const TokenSignature&, const WeightSignature&,                     \
                                              std::span<const Real>);                                            \
  template void apply_grad(TokenTable<Real>&, WeightTable<Real>&, const EmbeddingGrad<Real>&, Real);             \
  template void save_tables(std::ostream&, const EncoderConfig&, const TokenTable<Real>&,                        \
                            const WeightTable<Real>&);                                                           \
  template std::pair<TokenTable<Real>, WeightTable<Real>> load_tables(std::istream&, EncoderConfig&);

MEMREC_INSTANTIATE_TABLES(float)
MEMREC_INSTANTIATE_TABLES(double)

#undef MEMREC_INSTANTIATE_TABLES

}  // namespace memrec

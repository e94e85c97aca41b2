#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memrec/encoder.hpp"
#include "memrec/tables.hpp"

namespace memrec {

enum class EmbeddingScheme : std::uint8_t { memrec = 0, full = 1, hashtrick = 2, qr = 3 };

[[nodiscard]] std::string_view to_string(EmbeddingScheme scheme) noexcept;
// Throws ConfigError for unknown names.
[[nodiscard]] EmbeddingScheme parse_scheme(std::string_view name);

// Everything needed to build any of the embedding schemes. `encoder.l` is
// the embedding length for all of them.
struct EmbeddingConfig {
  EmbeddingScheme scheme = EmbeddingScheme::memrec;
  EncoderConfig encoder;
  std::size_t num_fields = 26;
  std::size_t hashtrick_rows = 4096;
  std::size_t qr_buckets = 64;
  bool train_weights = true;  // memrec only: false freezes w
  std::uint64_t init_seed = 1;

  void validate() const;
  bool operator==(const EmbeddingConfig&) const = default;
};

// A view of one trainable array and its gradient buffer (same length).
template <typename Real>
struct ParamBlock {
  std::string name;
  std::span<Real> values;
  std::span<Real> grads;
};

/// Dense gradient buffer for a row-structured store that remembers which
/// rows were touched, so clearing and stepping cost O(touched).
template <typename Real>
class RowGradAccumulator {
 public:
  RowGradAccumulator() = default;
  RowGradAccumulator(std::size_t rows, std::size_t dim) : dim_(dim), grad_(rows * dim, Real(0)), touched_(rows, 0) {}

  void add(std::size_t row, std::span<const Real> g) {
    mark(row);
    Real* dst = grad_.data() + row * dim_;
    for (std::size_t c = 0; c < dim_; ++c) dst[c] += g[c];
  }
  void add_scalar(std::size_t row, Real g) {
    mark(row);
    grad_[row * dim_] += g;
  }
  // Rows touched since the last clear, ascending.
  [[nodiscard]] std::vector<std::uint32_t> touched_rows() const;
  [[nodiscard]] std::span<const Real> row(std::size_t r) const { return {grad_.data() + r * dim_, dim_}; }
  [[nodiscard]] std::span<Real> data() noexcept { return grad_; }
  void clear();

 private:
  void mark(std::size_t row) {
    if (!touched_[row]) {
      touched_[row] = 1;
      touched_list_.push_back(static_cast<std::uint32_t>(row));
    }
  }

  std::size_t dim_ = 0;
  std::vector<Real> grad_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint32_t> touched_list_;
};

/// Common surface of every embedding scheme so one trainer drives them all.
/// Gradients accumulate across backward() calls until step() or zero_grad().
template <typename Real>
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  [[nodiscard]] virtual EmbeddingScheme scheme() const noexcept = 0;
  [[nodiscard]] virtual std::size_t dim() const noexcept = 0;

  virtual void embed(std::uint16_t field, std::span<const std::string> tokens, std::span<Real> out) const = 0;
  virtual void backward(std::uint16_t field, std::span<const std::string> tokens, std::span<const Real> upstream) = 0;
  virtual void step(Real lr) = 0;
  virtual void zero_grad() = 0;

  [[nodiscard]] virtual std::size_t param_count() const = 0;
  [[nodiscard]] virtual std::vector<ParamBlock<Real>> parameters() = 0;

  virtual void save(std::ostream& out) const = 0;
  [[nodiscard]] virtual std::unique_ptr<EmbeddingProvider> clone() const = 0;
};

/// The dual-Bloom scheme: token table M and weight table w shared by all
/// sparse fields; z = alpha(x) * (sum of M rows selected by phi(x)).
template <typename Real>
class MemRecEmbedding final : public EmbeddingProvider<Real> {
 public:
  MemRecEmbedding(const EncoderConfig& cfg, std::uint64_t init_seed, bool train_weights = true);
  MemRecEmbedding(const EncoderConfig& cfg, TokenTable<Real> tokens, WeightTable<Real> weights, bool train_weights);

  [[nodiscard]] EmbeddingScheme scheme() const noexcept override { return EmbeddingScheme::memrec; }
  [[nodiscard]] std::size_t dim() const noexcept override { return encoder_.config().l; }

  void embed(std::uint16_t field, std::span<const std::string> tokens, std::span<Real> out) const override;
  void backward(std::uint16_t field, std::span<const std::string> tokens, std::span<const Real> upstream) override;
  void step(Real lr) override;
  void zero_grad() override;

  [[nodiscard]] std::size_t param_count() const override { return tokens_.data().size() + weights_.size(); }
  [[nodiscard]] std::vector<ParamBlock<Real>> parameters() override;

  void save(std::ostream& out) const override;
  [[nodiscard]] static std::unique_ptr<MemRecEmbedding> load(std::istream& in, bool train_weights);
  [[nodiscard]] std::unique_ptr<EmbeddingProvider<Real>> clone() const override;

  [[nodiscard]] const Encoder& encoder() const noexcept { return encoder_; }
  [[nodiscard]] TokenTable<Real>& token_table() noexcept { return tokens_; }
  [[nodiscard]] const TokenTable<Real>& token_table() const noexcept { return tokens_; }
  [[nodiscard]] WeightTable<Real>& weight_table() noexcept { return weights_; }
  [[nodiscard]] const WeightTable<Real>& weight_table() const noexcept { return weights_; }

 private:
  Encoder encoder_;
  TokenTable<Real> tokens_;
  WeightTable<Real> weights_;
  bool train_weights_;
  RowGradAccumulator<Real> token_grad_;
  RowGradAccumulator<Real> weight_grad_;
};

}  // namespace memrec

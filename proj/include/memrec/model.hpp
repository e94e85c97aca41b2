#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "memrec/baselines.hpp"
#include "memrec/data.hpp"
#include "memrec/embedding.hpp"
#include "memrec/mlp.hpp"

namespace memrec {

/// Shapes of the toy DLRM. `bottom` includes its input (13) and must end at
/// the embedding length l; `top` lists hidden and output sizes only, its
/// input being the interaction length l + (F+1)F/2.
struct ModelConfig {
  EmbeddingConfig embedding;
  std::vector<std::size_t> bottom = {kNumDense, 64, 32, 16};
  std::vector<std::size_t> top = {64, 32, 1};

  void validate() const;
  [[nodiscard]] std::size_t embedding_dim() const noexcept { return embedding.encoder.l; }
  [[nodiscard]] std::size_t interaction_size() const noexcept;
  [[nodiscard]] std::vector<std::size_t> top_sizes() const;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr double kProbClamp = 1e-7;

// -(y ln p + (1-y) ln(1-p)) with p clamped to [1e-7, 1 - 1e-7].
[[nodiscard]] double bce_loss(double p, int y) noexcept;

// Concatenation of v[0] with all pairwise dot products v[i].v[j], i < j,
// in row-major pair order.
template <typename Real>
void interact(std::span<const std::vector<Real>> vectors, std::vector<Real>& out);

template <typename Real>
class Model {
 public:
  struct Trace {
    typename Mlp<Real>::Trace bottom;
    std::vector<std::vector<Real>> features;  // y_dense followed by one embedding per field
    std::vector<Real> interaction;
    typename Mlp<Real>::Trace top;
    Real logit = 0;
    Real prob = 0;
  };

  // Builds and initialises every parameter from cfg.embedding.init_seed.
  // `vocab` is needed by the full and qr schemes.
  Model(const ModelConfig& cfg, const Vocab* vocab = nullptr);
  Model(const ModelConfig& cfg, Mlp<Real> bottom, Mlp<Real> top, std::unique_ptr<EmbeddingProvider<Real>> embedding);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] Mlp<Real>& bottom() noexcept { return bottom_; }
  [[nodiscard]] Mlp<Real>& top() noexcept { return top_; }
  [[nodiscard]] EmbeddingProvider<Real>& embedding() noexcept { return *embedding_; }
  [[nodiscard]] const EmbeddingProvider<Real>& embedding() const noexcept { return *embedding_; }

  // Probability in (0, 1). Throws ConfigError on shape mismatch.
  [[nodiscard]] Real forward(const Record& rec) const;
  Real forward(const Record& rec, Trace& trace) const;
  // Accumulates gradients of a loss whose derivative w.r.t. the logit is dlogit.
  void backward(const Record& rec, const Trace& trace, Real dlogit);
  void step(Real lr);
  void zero_grad();

  // Mean BCE over the batch.
  [[nodiscard]] double batch_loss(std::span<const Record> batch) const;
  // Clears gradients, then accumulates those of the mean batch BCE. Returns the loss.
  double accumulate_gradients(std::span<const Record> batch);

  [[nodiscard]] std::vector<ParamBlock<Real>> parameters();
  [[nodiscard]] std::size_t param_count() const;

  // "MRCK" magic, version, real width, config, both MLPs, embedding payload.
  void save(std::ostream& out) const;
  [[nodiscard]] static Model load(std::istream& in);
  void save_file(const std::string& path) const;
  [[nodiscard]] static Model load_file(const std::string& path);

 private:
  ModelConfig cfg_;
  Mlp<Real> bottom_;
  Mlp<Real> top_;
  std::unique_ptr<EmbeddingProvider<Real>> embedding_;
};

struct TrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 256;
  double lr = 0.1;
  std::uint64_t shuffle_seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;  // NaN without a usable validation split
};

// "epoch,train_loss,val_auc"
[[nodiscard]] std::string format_epoch_log(const EpochLog& log);

// Minibatch SGD over a seeded shuffle each epoch. Throws DivergenceError on
// a non-finite loss.
template <typename Real>
std::vector<EpochLog> train(Model<Real>& model, std::span<const Record> train_set, std::span<const Record> val_set,
                            const TrainOptions& opts,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

template <typename Real>
[[nodiscard]] std::vector<double> predict(const Model<Real>& model, std::span<const Record> records);

// AUC of the model on `records`; NaN when only one class is present.
template <typename Real>
[[nodiscard]] double evaluate_auc(const Model<Real>& model, std::span<const Record> records);

}  // namespace memrec

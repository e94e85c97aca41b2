#include "memrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "memrec/binary_io.hpp"
#include "memrec/errors.hpp"
#include "memrec/metrics.hpp"

namespace memrec {

namespace {

constexpr std::uint32_t kModelVersion = 1;

void write_sizes(std::ostream& out, const std::vector<std::size_t>& sizes) {
  binio::write_pod<std::uint64_t>(out, sizes.size());
  for (const auto s : sizes) binio::write_pod<std::uint64_t>(out, s);
}

std::vector<std::size_t> read_sizes(std::istream& in) {
  const auto n = binio::read_pod<std::uint64_t>(in);
  if (n > 1024) throw DataError("implausible MLP depth in checkpoint");
  std::vector<std::size_t> sizes(n);
  for (auto& s : sizes) s = binio::read_pod<std::uint64_t>(in);
  return sizes;
}

template <typename Real>
void write_mlp(std::ostream& out, const Mlp<Real>& mlp) {
  for (const auto& layer : mlp.layers()) {
    binio::write_span(out, std::span<const Real>(layer.weight));
    binio::write_span(out, std::span<const Real>(layer.bias));
  }
}

template <typename Real>
void read_mlp(std::istream& in, Mlp<Real>& mlp) {
  for (auto& layer : mlp.layers()) {
    binio::read_span(in, std::span<Real>(layer.weight));
    binio::read_span(in, std::span<Real>(layer.bias));
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void ModelConfig::validate() const {
  embedding.validate();
  if (bottom.size() < 2) throw ConfigError("arch_mlp_bot needs at least two sizes");
  if (bottom.back() != embedding_dim()) {
    throw ConfigError("bottom MLP output (" + std::to_string(bottom.back()) + ") must equal embedding length l (" +
                      std::to_string(embedding_dim()) + ")");
  }
  if (top.empty()) throw ConfigError("arch_mlp_top needs at least one size");
  if (top.back() != 1) throw ConfigError("top MLP must end in a single output");
}

std::size_t ModelConfig::interaction_size() const noexcept {
  const std::size_t f = embedding.num_fields;
  return embedding_dim() + (f + 1) * f / 2;
}

std::vector<std::size_t> ModelConfig::top_sizes() const {
  std::vector<std::size_t> sizes{interaction_size()};
  sizes.insert(sizes.end(), top.begin(), top.end());
  return sizes;
}

double bce_loss(double p, int y) noexcept {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(q) : -std::log1p(-q);
}

template <typename Real>
void interact(std::span<const std::vector<Real>> vectors, std::vector<Real>& out) {
  const std::size_t n = vectors.size();
  const std::size_t dim = vectors[0].size();
  out.assign(vectors[0].begin(), vectors[0].end());
  out.reserve(dim + n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      Real dot = 0;
      for (std::size_t c = 0; c < dim; ++c) dot += vectors[i][c] * vectors[j][c];
      out.push_back(dot);
    }
  }
}

template <typename Real>
Model<Real>::Model(const ModelConfig& cfg, const Vocab* vocab) : cfg_(cfg) {
  cfg_.validate();
  bottom_ = Mlp<Real>(cfg_.bottom, true);
  top_ = Mlp<Real>(cfg_.top_sizes(), false);
  std::mt19937_64 rng(derive_seed(cfg_.embedding.init_seed, 0x6d6c70));
  bottom_.init(rng);
  top_.init(rng);
  embedding_ = make_embedding<Real>(cfg_.embedding, vocab);
}

template <typename Real>
Model<Real>::Model(const ModelConfig& cfg, Mlp<Real> bottom, Mlp<Real> top,
                   std::unique_ptr<EmbeddingProvider<Real>> embedding)
    : cfg_(cfg), bottom_(std::move(bottom)), top_(std::move(top)), embedding_(std::move(embedding)) {
  cfg_.validate();
  if (bottom_.sizes() != cfg_.bottom || top_.sizes() != cfg_.top_sizes()) {
    throw ConfigError("MLP shapes do not match model config");
  }
  if (!embedding_ || embedding_->dim() != cfg_.embedding_dim()) {
    throw ConfigError("embedding provider does not match model config");
  }
}

template <typename Real>
Model<Real>::Model(const Model& other)
    : cfg_(other.cfg_), bottom_(other.bottom_), top_(other.top_), embedding_(other.embedding_->clone()) {}

template <typename Real>
Model<Real>& Model<Real>::operator=(const Model& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    bottom_ = other.bottom_;
    top_ = other.top_;
    embedding_ = other.embedding_->clone();
  }
  return *this;
}

template <typename Real>
Real Model<Real>::forward(const Record& rec) const {
  Trace trace;
  return forward(rec, trace);
}

template <typename Real>
Real Model<Real>::forward(const Record& rec, Trace& trace) const {
  const std::size_t fields = cfg_.embedding.num_fields;
  if (rec.dense.size() != bottom_.input_size()) {
    throw ConfigError("record has " + std::to_string(rec.dense.size()) + " dense values, model expects " +
                      std::to_string(bottom_.input_size()));
  }
  if (rec.sparse.size() != fields) {
    throw ConfigError("record has " + std::to_string(rec.sparse.size()) + " sparse fields, model expects " +
                      std::to_string(fields));
  }
  std::vector<Real> dense(rec.dense.begin(), rec.dense.end());
  bottom_.forward(dense, trace.bottom);

  const std::size_t dim = cfg_.embedding_dim();
  trace.features.resize(fields + 1);
  trace.features[0] = trace.bottom.act.back();
  for (std::size_t f = 0; f < fields; ++f) {
    trace.features[f + 1].resize(dim);
    embedding_->embed(static_cast<std::uint16_t>(f), rec.sparse[f], trace.features[f + 1]);
  }
  interact<Real>(trace.features, trace.interaction);
  top_.forward(trace.interaction, trace.top);
  trace.logit = trace.top.act.back()[0];
  trace.prob = static_cast<Real>(sigmoid(static_cast<double>(trace.logit)));
  return trace.prob;
}

template <typename Real>
void Model<Real>::backward(const Record& rec, const Trace& trace, Real dlogit) {
  const std::size_t dim = cfg_.embedding_dim();
  const std::size_t n = trace.features.size();
  std::vector<Real> grad_inter(trace.interaction.size());
  const Real g_out[1] = {dlogit};
  top_.backward(trace.top, g_out, grad_inter);

  std::vector<std::vector<Real>> grad_features(n, std::vector<Real>(dim, Real(0)));
  std::copy_n(grad_inter.begin(), dim, grad_features[0].begin());
  std::size_t idx = dim;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Real g = grad_inter[idx++];
      if (g == Real(0)) continue;
      const auto& vi = trace.features[i];
      const auto& vj = trace.features[j];
      for (std::size_t c = 0; c < dim; ++c) {
        grad_features[i][c] += g * vj[c];
        grad_features[j][c] += g * vi[c];
      }
    }
  }
  bottom_.backward(trace.bottom, grad_features[0], {});
  for (std::size_t f = 0; f + 1 < n; ++f) {
    embedding_->backward(static_cast<std::uint16_t>(f), rec.sparse[f], grad_features[f + 1]);
  }
}

template <typename Real>
void Model<Real>::step(Real lr) {
  bottom_.step(lr);
  top_.step(lr);
  embedding_->step(lr);
}

template <typename Real>
void Model<Real>::zero_grad() {
  bottom_.zero_grad();
  top_.zero_grad();
  embedding_->zero_grad();
}

template <typename Real>
double Model<Real>::batch_loss(std::span<const Record> batch) const {
  double loss = 0.0;
  Trace trace;
  for (const auto& rec : batch) loss += bce_loss(static_cast<double>(forward(rec, trace)), rec.label);
  return batch.empty() ? 0.0 : loss / static_cast<double>(batch.size());
}

namespace {

// dBCE/dlogit, zero where the probability clamp is active.
double bce_logit_grad(double p, int y) {
  if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
  return p - static_cast<double>(y);
}

template <typename Real>
double accumulate_over(Model<Real>& model, std::span<const Record* const> batch) {
  typename Model<Real>::Trace trace;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Record* rec : batch) {
    const double p = static_cast<double>(model.forward(*rec, trace));
    loss += bce_loss(p, rec->label);
    model.backward(*rec, trace, static_cast<Real>(bce_logit_grad(p, rec->label) * scale));
  }
  return loss * scale;
}

}  // namespace

template <typename Real>
double Model<Real>::accumulate_gradients(std::span<const Record> batch) {
  zero_grad();
  if (batch.empty()) return 0.0;
  std::vector<const Record*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& r : batch) ptrs.push_back(&r);
  return accumulate_over(*this, std::span<const Record* const>(ptrs));
}

template <typename Real>
std::vector<ParamBlock<Real>> Model<Real>::parameters() {
  auto out = bottom_.parameters("bottom");
  auto top = top_.parameters("top");
  out.insert(out.end(), top.begin(), top.end());
  auto emb = embedding_->parameters();
  out.insert(out.end(), emb.begin(), emb.end());
  return out;
}

template <typename Real>
std::size_t Model<Real>::param_count() const {
  return bottom_.param_count() + top_.param_count() + embedding_->param_count();
}

template <typename Real>
void Model<Real>::save(std::ostream& out) const {
  const auto& e = cfg_.embedding;
  binio::write_bytes(out, "MRCK", 4);
  binio::write_pod<std::uint32_t>(out, kModelVersion);
  binio::write_pod<std::uint32_t>(out, sizeof(Real));
  binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(e.scheme));
  binio::write_pod<std::uint8_t>(out, e.train_weights ? 1 : 0);
  for (const std::uint64_t v : {std::uint64_t(e.encoder.k), std::uint64_t(e.encoder.k_prime),
                                std::uint64_t(e.encoder.d), std::uint64_t(e.encoder.d_prime),
                                std::uint64_t(e.encoder.l), e.encoder.hash_seed, std::uint64_t(e.num_fields),
                                std::uint64_t(e.hashtrick_rows), std::uint64_t(e.qr_buckets), e.init_seed}) {
    binio::write_pod(out, v);
  }
  write_sizes(out, cfg_.bottom);
  write_sizes(out, cfg_.top);
  write_mlp(out, bottom_);
  write_mlp(out, top_);
  embedding_->save(out);
}

template <typename Real>
Model<Real> Model<Real>::load(std::istream& in) {
  binio::expect_magic(in, "MRCK");
  if (binio::read_pod<std::uint32_t>(in) != kModelVersion) throw DataError("unsupported checkpoint version");
  if (binio::read_pod<std::uint32_t>(in) != sizeof(Real)) throw DataError("checkpoint precision mismatch");
  ModelConfig cfg;
  auto& e = cfg.embedding;
  const auto scheme = binio::read_pod<std::uint8_t>(in);
  if (scheme > static_cast<std::uint8_t>(EmbeddingScheme::qr)) throw DataError("unknown scheme in checkpoint");
  e.scheme = static_cast<EmbeddingScheme>(scheme);
  e.train_weights = binio::read_pod<std::uint8_t>(in) != 0;
  e.encoder.k = binio::read_pod<std::uint64_t>(in);
  e.encoder.k_prime = binio::read_pod<std::uint64_t>(in);
  e.encoder.d = binio::read_pod<std::uint64_t>(in);
  e.encoder.d_prime = binio::read_pod<std::uint64_t>(in);
  e.encoder.l = binio::read_pod<std::uint64_t>(in);
  e.encoder.hash_seed = binio::read_pod<std::uint64_t>(in);
  e.num_fields = binio::read_pod<std::uint64_t>(in);
  e.hashtrick_rows = binio::read_pod<std::uint64_t>(in);
  e.qr_buckets = binio::read_pod<std::uint64_t>(in);
  e.init_seed = binio::read_pod<std::uint64_t>(in);
  cfg.bottom = read_sizes(in);
  cfg.top = read_sizes(in);
  cfg.validate();
  Mlp<Real> bottom(cfg.bottom, true);
  Mlp<Real> top(cfg.top_sizes(), false);
  read_mlp(in, bottom);
  read_mlp(in, top);
  auto embedding = load_embedding<Real>(e, in);
  return Model(cfg, std::move(bottom), std::move(top), std::move(embedding));
}

template <typename Real>
void Model<Real>::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  save(out);
}

template <typename Real>
Model<Real> Model<Real>::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return load(in);
}

std::string format_epoch_log(const EpochLog& log) {
  std::ostringstream os;
  os.precision(10);
  os << log.epoch << ',' << log.train_loss << ',' << log.val_auc;
  return os.str();
}

template <typename Real>
std::vector<EpochLog> train(Model<Real>& model, std::span<const Record> train_set, std::span<const Record> val_set,
                            const TrainOptions& opts, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw DataError("training set is empty");
  if (opts.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!std::isfinite(opts.lr)) throw ConfigError("learning rate must be finite");

  std::mt19937_64 rng(opts.shuffle_seed);
  std::vector<const Record*> order(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) order[i] = &train_set[i];

  std::vector<EpochLog> logs;
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size, ++batch_index) {
      const std::size_t n = std::min(opts.batch_size, order.size() - start);
      model.zero_grad();
      const double loss = accumulate_over(model, std::span<const Record* const>(order.data() + start, n));
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index) + " (lr=" + std::to_string(opts.lr) + ")");
      }
      loss_sum += loss * static_cast<double>(n);
      model.step(static_cast<Real>(opts.lr));
    }
    EpochLog log{epoch, loss_sum / static_cast<double>(order.size()), std::numeric_limits<double>::quiet_NaN()};
    if (!val_set.empty()) log.val_auc = evaluate_auc(model, val_set);
    if (on_epoch) on_epoch(log);
    logs.push_back(log);
  }
  return logs;
}

template <typename Real>
std::vector<double> predict(const Model<Real>& model, std::span<const Record> records) {
  std::vector<double> out;
  out.reserve(records.size());
  typename Model<Real>::Trace trace;
  for (const auto& rec : records) out.push_back(static_cast<double>(model.forward(rec, trace)));
  return out;
}

template <typename Real>
double evaluate_auc(const Model<Real>& model, std::span<const Record> records) {
  const auto scores = predict(model, records);
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) return std::numeric_limits<double>::quiet_NaN();
  return roc_auc(scores, labels);
}

#define MEMREC_INSTANTIATE_MODEL(Real)                                                                         \
  template void interact(std::span<const std::vector<Real>>, std::vector<Real>&);                              \
  template class Model<Real>;                                                                                  \
  template std::vector<EpochLog> train(Model<Real>&, std::span<const Record>, std::span<const Record>,         \
                                       const TrainOptions&, const std::function<void(const EpochLog&)>&);     \
  template std::vector<double> predict(const Model<Real>&, std::span<const Record>);                          \
  template double evaluate_auc(const Model<Real>&, std::span<const Record>);

MEMREC_INSTANTIATE_MODEL(float)
MEMREC_INSTANTIATE_MODEL(double)

#undef MEMREC_INSTANTIATE_MODEL

}  // namespace memrec

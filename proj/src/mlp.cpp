#include "memrec/mlp.hpp"

#include <cmath>
#include <string>

#include "memrec/errors.hpp"

namespace memrec {

template <typename Real>
Mlp<Real>::Mlp(std::vector<std::size_t> sizes, bool relu_on_output)
    : sizes_(std::move(sizes)), relu_on_output_(relu_on_output) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least two layer sizes");
  for (const auto s : sizes_) {
    if (s == 0) throw ConfigError("MLP layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    DenseLayer<Real> layer;
    layer.in = sizes_[i];
    layer.out = sizes_[i + 1];
    layer.weight.assign(layer.in * layer.out, Real(0));
    layer.bias.assign(layer.out, Real(0));
    layer.weight_grad.assign(layer.weight.size(), Real(0));
    layer.bias_grad.assign(layer.out, Real(0));
    layers_.push_back(std::move(layer));
  }
}

template <typename Real>
void Mlp<Real>::init(std::mt19937_64& rng) {
  for (auto& layer : layers_) {
    std::normal_distribution<double> w(0.0, std::sqrt(2.0 / static_cast<double>(layer.in + layer.out)));
    std::normal_distribution<double> b(0.0, std::sqrt(1.0 / static_cast<double>(layer.out)));
    for (auto& v : layer.weight) v = static_cast<Real>(w(rng));
    for (auto& v : layer.bias) v = static_cast<Real>(b(rng));
  }
}

template <typename Real>
void Mlp<Real>::forward(std::span<const Real> input, Trace& trace) const {
  if (input.size() != input_size()) {
    throw ConfigError("MLP input of length " + std::to_string(input.size()) + ", expected " +
                      std::to_string(input_size()));
  }
  trace.act.resize(layers_.size() + 1);
  trace.act[0].assign(input.begin(), input.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    const auto& x = trace.act[i];
    auto& y = trace.act[i + 1];
    y.resize(layer.out);
    const bool rectify = relu_on_output_ || i + 1 < layers_.size();
    for (std::size_t o = 0; o < layer.out; ++o) {
      const Real* w = layer.weight.data() + o * layer.in;
      Real acc = layer.bias[o];
      for (std::size_t c = 0; c < layer.in; ++c) acc += w[c] * x[c];
      y[o] = rectify && acc < Real(0) ? Real(0) : acc;
    }
  }
}

template <typename Real>
void Mlp<Real>::backward(const Trace& trace, std::span<const Real> grad_out, std::span<Real> grad_in) {
  std::vector<Real> g(grad_out.begin(), grad_out.end());
  for (std::size_t i = layers_.size(); i-- > 0;) {
    auto& layer = layers_[i];
    const auto& x = trace.act[i];
    const auto& y = trace.act[i + 1];
    const bool rectify = relu_on_output_ || i + 1 < layers_.size();
    if (rectify) {
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (y[o] <= Real(0)) g[o] = Real(0);
      }
    }
    scratch_.assign(layer.in, Real(0));
    for (std::size_t o = 0; o < layer.out; ++o) {
      const Real go = g[o];
      if (go == Real(0)) continue;
      layer.bias_grad[o] += go;
      Real* wg = layer.weight_grad.data() + o * layer.in;
      const Real* w = layer.weight.data() + o * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) {
        wg[c] += go * x[c];
        scratch_[c] += go * w[c];
      }
    }
    g.swap(scratch_);
  }
  if (!grad_in.empty()) std::copy(g.begin(), g.end(), grad_in.begin());
}

template <typename Real>
void Mlp<Real>::step(Real lr) {
  for (auto& layer : layers_) {
    for (std::size_t i = 0; i < layer.weight.size(); ++i) layer.weight[i] -= lr * layer.weight_grad[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * layer.bias_grad[i];
  }
  zero_grad();
}

template <typename Real>
void Mlp<Real>::zero_grad() {
  for (auto& layer : layers_) {
    std::fill(layer.weight_grad.begin(), layer.weight_grad.end(), Real(0));
    std::fill(layer.bias_grad.begin(), layer.bias_grad.end(), Real(0));
  }
}

template <typename Real>
std::size_t Mlp<Real>::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

template <typename Real>
std::vector<ParamBlock<Real>> Mlp<Real>::parameters(const std::string& prefix) {
  std::vector<ParamBlock<Real>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& layer = layers_[i];
    out.push_back({prefix + ".w" + std::to_string(i), layer.weight, layer.weight_grad});
    out.push_back({prefix + ".b" + std::to_string(i), layer.bias, layer.bias_grad});
  }
  return out;
}

template class Mlp<float>;
template class Mlp<double>;

}  // namespace memrec

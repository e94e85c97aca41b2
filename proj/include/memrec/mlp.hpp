#pragma once

#include <random>
#include <span>
#include <vector>

#include "memrec/embedding.hpp"

namespace memrec {

template <typename Real>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<Real> weight;  // out x in, row-major
  std::vector<Real> bias;
  std::vector<Real> weight_grad;
  std::vector<Real> bias_grad;
};

/// Fully connected stack with ReLU between layers. The last layer is
/// rectified only when `relu_on_output` is set.
template <typename Real>
class Mlp {
 public:
  // act[0] is the input, act[i + 1] the output of layer i.
  struct Trace {
    std::vector<std::vector<Real>> act;
  };

  Mlp() = default;
  Mlp(std::vector<std::size_t> sizes, bool relu_on_output);

  // W ~ N(0, sqrt(2 / (in + out))), b ~ N(0, sqrt(1 / out)).
  void init(std::mt19937_64& rng);

  void forward(std::span<const Real> input, Trace& trace) const;
  // Accumulates parameter gradients; writes dL/d(input) when grad_in is non-empty.
  void backward(const Trace& trace, std::span<const Real> grad_out, std::span<Real> grad_in);
  void step(Real lr);
  void zero_grad();

  [[nodiscard]] const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  [[nodiscard]] bool relu_on_output() const noexcept { return relu_on_output_; }
  [[nodiscard]] std::size_t input_size() const { return sizes_.front(); }
  [[nodiscard]] std::size_t output_size() const { return sizes_.back(); }
  [[nodiscard]] std::size_t param_count() const;
  [[nodiscard]] std::vector<DenseLayer<Real>>& layers() noexcept { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer<Real>>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::vector<ParamBlock<Real>> parameters(const std::string& prefix);

 private:
  std::vector<std::size_t> sizes_;
  bool relu_on_output_ = false;
  std::vector<DenseLayer<Real>> layers_;
  mutable std::vector<Real> scratch_;
};

}  // namespace memrec

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace memrec {

// Samples ranks in [0, n) with P(r) proportional to 1 / (r + 1)^exponent.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
      cdf_[r] = acc;
    }
    for (auto& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
  }

  template <typename Rng>
  std::size_t operator()(Rng& rng) const {
    return rank_for(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  }

  // Inverse CDF at u in [0, 1).
  [[nodiscard]] std::size_t rank_for(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

  [[nodiscard]] std::size_t size() const noexcept { return cdf_.size(); }
  [[nodiscard]] double probability(std::size_t r) const { return r == 0 ? cdf_[0] : cdf_[r] - cdf_[r - 1]; }

 private:
  std::vector<double> cdf_;
};

}  // namespace memrec

#include "stlab/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stlab/special.hpp"

namespace stlab {

OffspringLaw OffspringLaw::make(const ModelParams& p, std::size_t table_size) {
  OffspringLaw law;
  law.gamma_ = p.gamma;
  if (table_size < 16) throw std::domain_error("OffspringLaw: table too small");

  if (p.is_quadratic()) {
    law.geometric_ = true;
    law.probs_.resize(table_size);
    law.cdf_.resize(table_size);
    double c = 0.0;
    for (std::size_t k = 0; k < table_size; ++k) {
      law.probs_[k] = std::pow(0.5, static_cast<double>(k + 1));
      c += law.probs_[k];
      law.cdf_[k] = c;
    }
    law.tail_mass_ = std::pow(0.5, static_cast<double>(table_size));
    law.tail_coef_ = 0.0;
    return law;
  }

  const double g = p.gamma;
  law.probs_.resize(table_size);
  law.cdf_.resize(table_size);
  law.probs_[0] = 1.0 / g;
  law.probs_[1] = 0.0;
  double tail = (g - 1.0) / g;  // P(X > 1)
  law.cdf_[0] = law.probs_[0];
  law.cdf_[1] = law.cdf_[0];
  for (std::size_t k = 2; k < table_size; ++k) {
    double pk = tail * g / static_cast<double>(k);  // p_k = gamma T_{k-1} / k
    law.probs_[k] = pk;
    tail *= (static_cast<double>(k) - g) / static_cast<double>(k);
    law.cdf_[k] = law.cdf_[k - 1] + pk;
  }
  law.tail_mass_ = tail;
  law.tail_coef_ = 1.0 / (g * std::fabs(gamma_fn(-g)));
  return law;
}

uint64_t OffspringLaw::sample(RandomStream& rng) const {
  const double u = rng.u01();
  if (geometric_) {
    double k = std::floor(-std::log2(1.0 - u));
    return static_cast<uint64_t>(std::min(k, 4096.0));
  }
  if (u <= 1.0 - tail_mass_) {
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<uint64_t>(it - cdf_.begin());
  }
  // continue the exact recurrence into the tail: find the smallest k with
  // P(X > k) <= 1-u
  const double target = 1.0 - u;
  uint64_t k = probs_.size() - 1;
  double tail = tail_mass_;
  while (tail > target) {
    ++k;
    tail *= (static_cast<double>(k) - gamma_) / static_cast<double>(k);
    if (k > (1ull << 40)) break;  // u indistinguishable from 1
  }
  return k;
}

double OffspringLaw::prob(uint64_t k) const {
  if (geometric_) return std::pow(0.5, static_cast<double>(k + 1));
  if (k < probs_.size()) return probs_[k];
  double tail = tail_mass_;
  double pk = 0.0;
  for (uint64_t j = probs_.size(); j <= k; ++j) {
    pk = tail * gamma_ / static_cast<double>(j);
    tail *= (static_cast<double>(j) - gamma_) / static_cast<double>(j);
  }
  return pk;
}

double OffspringLaw::total_mass() const {
  double s = tail_mass_;
  for (std::size_t k = probs_.size(); k-- > 0;) s += probs_[k];
  return s;
}

double OffspringLaw::mean_check() const {
  if (geometric_) {
    double m = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) m += k * probs_[k];
    // geometric tail mean: sum_{k>K} k 2^{-k-1} = (K+2) 2^{-K}
    m += (probs_.size() + 2.0) * std::pow(0.5, static_cast<double>(probs_.size()));
    return m;
  }
  double m = 0.0;
  for (std::size_t k = probs_.size(); k-- > 2;) m += k * probs_[k];
  // tail mean telescopes: sum_{k>K} k p_k = |C(gamma-2, K-1)|
  double r = 2.0 - gamma_;  // |C(gamma-2, 1)|
  for (std::size_t j = 2; j + 1 < probs_.size(); ++j)
    r *= (static_cast<double>(j) + 1.0 - gamma_) / static_cast<double>(j);
  return m + r;
}

}  // namespace stlab

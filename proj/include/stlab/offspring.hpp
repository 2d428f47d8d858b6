#pragma once

#include <cstdint>
#include <vector>

#include "stlab/model.hpp"
#include "stlab/rng.hpp"

// Critical offspring law in the gamma-stable domain of attraction, from the
// pgf f(s) = s + (1-s)^gamma / gamma:
//   p_0 = 1/gamma,  p_1 = 0,  p_k = |C(gamma,k)|/gamma  (k >= 2),
// with p_k ~ tail_coef k^{-1-gamma}. Probabilities satisfy the recurrence
// p_{k+1} = p_k (k-gamma)/(k+1), and the mass beyond K telescopes exactly to
// |C(gamma-1,K)|/gamma, so sampling continues the recurrence into the tail
// instead of truncating. gamma = 2 uses the critical geometric(1/2) control.

namespace stlab {

class OffspringLaw {
 public:
  static OffspringLaw make(const ModelParams& p, std::size_t table_size = 4096);

  uint64_t sample(RandomStream& rng) const;

  double gamma() const { return gamma_; }
  bool geometric() const { return geometric_; }
  double prob(uint64_t k) const;              // exact p_k for any k
  double tail_mass() const { return tail_mass_; }  // P(X > K)
  double tail_exponent() const { return gamma_ + 1.0; }
  double tail_coef() const { return tail_coef_; }
  std::size_t table_size() const { return probs_.size(); }

  // p_0 + p_2 + ... + p_K plus the exact tail mass; equals 1 up to rounding
  double total_mass() const;
  // sum k p_k over the table plus the analytic tail mean; equals 1 (criticality)
  double mean_check() const;

 private:
  double gamma_ = 0.0;
  bool geometric_ = false;
  std::vector<double> probs_;  // p_0 .. p_K
  std::vector<double> cdf_;    // cumulative
  double tail_mass_ = 0.0;     // exact P(X > K)
  double tail_coef_ = 0.0;
};

}  // namespace stlab

#pragma once

#include <cmath>
#include <stdexcept>

namespace stlab {

// Branching index of the stable mechanism psi(lambda) = lambda^gamma.
// The multiplicative constant is fixed to 1; every closed form in the
// analytic module assumes that normalization.
struct ModelParams {
  double gamma = 1.5;

  explicit ModelParams(double g) : gamma(g) {
    if (!(g > 1.0) || !(g <= 2.0))
      throw std::domain_error("ModelParams: gamma must lie in (1, 2]");
  }

  bool is_quadratic() const { return gamma == 2.0; }

  // gamma - 1, the exponent that rules most scaling relations
  double gm1() const { return gamma - 1.0; }
  // 1/(gamma-1): dimension of level sets, local-time scaling exponent
  double inv_gm1() const { return 1.0 / (gamma - 1.0); }
  // gamma/(gamma-1): dimension of the tree, mass-measure scaling exponent
  double tree_dim() const { return gamma / (gamma - 1.0); }

  double psi(double lambda) const { return std::pow(lambda, gamma); }
};

}  // namespace stlab

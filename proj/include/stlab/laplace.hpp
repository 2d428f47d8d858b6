#pragma once

#include <cmath>
#include <complex>
#include <functional>

// Numerical inverse Laplace transform: fixed-Talbot contour (Abate-Valko).
// Adequate for transforms analytic off the negative real axis, which covers
// the completely monotone transforms inverted in this project.

namespace stlab {

using LaplaceTransform = std::function<std::complex<double>(std::complex<double>)>;

// Roundoff grows like e^{2M/5} eps, so M near 28 is the double-precision
// sweet spot (~1e-12); larger M makes things worse, not better.
// f(t) ~ (r/M) [ 0.5 e^{rt} F(r) + sum_k Re( e^{t s_k} F(s_k) (1 + i sigma_k) ) ]
// with s(theta) = r theta (cot theta + i), r = 2M/(5t).
inline double talbot_invert(const LaplaceTransform& transform, double t,
                            int M = 28) {
  const double r = 2.0 * M / (5.0 * t);
  double acc = 0.5 * std::exp(r * t) * transform(std::complex<double>(r, 0.0)).real();
  for (int k = 1; k < M; ++k) {
    const double theta = k * M_PI / M;
    const double cot = std::cos(theta) / std::sin(theta);
    const std::complex<double> s(r * theta * cot, r * theta);
    const double sigma = theta + (theta * cot - 1.0) * cot;
    const std::complex<double> weight(1.0, sigma);
    acc += (std::exp(s * t) * transform(s) * weight).real();
  }
  return acc * r / M;
}

}  // namespace stlab

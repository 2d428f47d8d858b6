#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "stlab/model.hpp"
#include "stlab/special.hpp"

// Closed-form functions of the stable mechanism psi(lambda) = lambda^gamma:
// the extinction intensity v, the one-parameter cumulant u_a, the level-a
// local-time Laplace transform, the joint cumulant kappa_a(lambda, mu)
// solved from its integral equation, tail asymptotics, gauge functions and
// the Poisson Chernoff bound. Everything here is deterministic and serves
// as the oracle layer for the samplers.

namespace stlab {

// Marker for the mu = +infinity limit argument of u_a and kappa.
inline constexpr double mu_infinity = std::numeric_limits<double>::infinity();

// v(a) = ((gamma-1) a)^{-1/(gamma-1)}, the measure of trees higher than a.
inline double extinction_intensity(double a, const ModelParams& p) {
  if (!(a > 0.0)) throw std::domain_error("extinction_intensity: a must be > 0");
  return std::pow(p.gm1() * a, -p.inv_gm1());
}

// u_a(mu) = ((gamma-1) a + mu^{1-gamma})^{-1/(gamma-1)}; u_a(inf) = v(a).
inline double cumulant_u(double a, double mu, const ModelParams& p) {
  if (!(a > 0.0)) throw std::domain_error("cumulant_u: a must be > 0");
  if (mu < 0.0) throw std::domain_error("cumulant_u: mu must be >= 0");
  if (mu == 0.0) return 0.0;
  if (std::isinf(mu)) return extinction_intensity(a, p);
  return std::pow(p.gm1() * a + std::pow(mu, 1.0 - p.gamma), -p.inv_gm1());
}

// E_{N_a}[exp(-mu <l^a>)] = 1 - (1 + 1/((gamma-1) a mu^{gamma-1}))^{-1/(gamma-1)}.
inline double laplace_Na(double mu, double a, const ModelParams& p) {
  if (!(a > 0.0)) throw std::domain_error("laplace_Na: a must be > 0");
  if (mu < 0.0) throw std::domain_error("laplace_Na: mu must be >= 0");
  if (mu == 0.0) return 1.0;
  if (std::isinf(mu)) return 0.0;
  double t = 1.0 / (p.gm1() * a * std::pow(mu, p.gm1()));
  return 1.0 - std::pow(1.0 + t, -p.inv_gm1());
}

struct KappaSolution {
  double a = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double value = 0.0;     // kappa_a(lambda, mu)
  double residual = 0.0;  // defect of the integral equation at the solution
};

// Solves int_mu^kappa du / (lambda - u^gamma) = a for kappa. mu may be
// stlab::mu_infinity. Throws std::runtime_error if the root finder fails,
// with the residual in the message.
KappaSolution kappa_solve(double a, double lambda, double mu,
                          const ModelParams& p);

// Closed form at gamma = 2 used as an independent oracle in tests:
// kappa_a(lambda, mu) = sqrt(l) (mu + sqrt(l) tanh(a sqrt(l))) /
//                       (sqrt(l) + mu tanh(a sqrt(l))).
inline double kappa_quadratic(double a, double lambda, double mu) {
  if (lambda == 0.0) return std::isinf(mu) ? 1.0 / a : mu / (1.0 + a * mu);
  double s = std::sqrt(lambda);
  double th = std::tanh(a * s);
  if (std::isinf(mu)) return s / th;
  return s * (mu + s * th) / (s + mu * th);
}

enum class TailKind { local_time_left, local_time_right, ball_mass_right };

// Tail asymptotics of the local-time and root-ball mass laws:
//   local_time_left : N_1(<l^1> <= x) ~ x^{gamma-1} / ((gamma-1)^2 Gamma(gamma))
//   local_time_right: N_1(<l^1> >= x) ~ -x^{-gamma} / (v(1) Gamma(1-gamma))
//   ball_mass_right : N_1(m(B(rho,1+c)) >= x)
//                  ~ -(1+c)^{gamma+1} x^{-gamma} / ((gamma+1) v(1) Gamma(1-gamma))
// The right-tail kinds are undefined at gamma = 2 (Gamma(-1) pole); callers
// there are in the exponential-tail regime instead.
inline double tail_asymptotics(TailKind kind, double x, double c,
                               const ModelParams& p) {
  if (!(x > 0.0)) throw std::domain_error("tail_asymptotics: x must be > 0");
  const double g = p.gamma;
  switch (kind) {
    case TailKind::local_time_left:
      return std::pow(x, g - 1.0) / (p.gm1() * p.gm1() * gamma_fn(g));
    case TailKind::local_time_right: {
      if (g == 2.0)
        throw std::domain_error(
            "tail_asymptotics: right tail undefined at gamma=2 "
            "(use the exponential-tail regime)");
      double v1 = extinction_intensity(1.0, p);
      return -std::pow(x, -g) / (v1 * gamma_fn(1.0 - g));
    }
    case TailKind::ball_mass_right: {
      if (g == 2.0)
        throw std::domain_error(
            "tail_asymptotics: right tail undefined at gamma=2 "
            "(use the exponential-tail regime)");
      if (c < 0.0) throw std::domain_error("tail_asymptotics: c must be >= 0");
      double v1 = extinction_intensity(1.0, p);
      return -std::pow(1.0 + c, g + 1.0) * std::pow(x, -g) /
             ((g + 1.0) * v1 * gamma_fn(1.0 - g));
    }
  }
  throw std::logic_error("tail_asymptotics: unknown kind");
}

enum class GaugeKind { g_gamma, f_gamma, log_g, loglog_h };

// Gauge functions:
//   g_gamma(r)  = r^{gamma/(gamma-1)} / (loglog 1/r)^{1/(gamma-1)}
//   f_gamma(r)  = r^{gamma/(gamma-1)} * (log 1/r)^{1/(gamma-1)}
//   log_g(r)    = 1 / log(1/r)
//   loglog_h(r) = 1 / loglog(1/r)
inline double gauges(GaugeKind kind, double r, const ModelParams& p) {
  if (!(r > 0.0) || !(r < 1.0))
    throw std::domain_error("gauges: r must lie in (0,1)");
  const double lg = std::log(1.0 / r);
  switch (kind) {
    case GaugeKind::log_g:
      return 1.0 / lg;
    case GaugeKind::f_gamma:
      return std::pow(r, p.tree_dim()) * std::pow(lg, p.inv_gm1());
    case GaugeKind::g_gamma:
    case GaugeKind::loglog_h: {
      if (!(lg > 1.0))
        throw std::domain_error("gauges: loglog(1/r) must be positive");
      double llg = std::log(lg);
      if (kind == GaugeKind::loglog_h) return 1.0 / llg;
      return std::pow(r, p.tree_dim()) / std::pow(llg, p.inv_gm1());
    }
  }
  throw std::logic_error("gauges: unknown kind");
}

enum class ChernoffSide { upper, lower };

// Poisson Chernoff bound exp(-lambda) (e lambda)^y y^{-y}; valid for
// P(X >= y) when y >= lambda and for P(X <= y) when y <= lambda.
inline double chernoff_poisson(double lambda, double y, ChernoffSide side) {
  if (!(lambda > 0.0) || y < 0.0)
    throw std::domain_error("chernoff_poisson: need lambda > 0, y >= 0");
  if (side == ChernoffSide::upper && y < lambda)
    throw std::domain_error("chernoff_poisson: upper bound needs y >= lambda");
  if (side == ChernoffSide::lower && y > lambda)
    throw std::domain_error("chernoff_poisson: lower bound needs y <= lambda");
  if (y == 0.0) return std::exp(-lambda);
  return std::exp(-lambda + y * (1.0 + std::log(lambda) - std::log(y)));
}

// Exact Poisson tails for the Chernoff domination tests.
inline double poisson_cdf(double lambda, uint64_t k) {
  return gamma_q(static_cast<double>(k) + 1.0, lambda);
}
inline double poisson_sf(double lambda, uint64_t k) {
  // P(X >= k)
  if (k == 0) return 1.0;
  return gamma_p(static_cast<double>(k), lambda);
}

}  // namespace stlab

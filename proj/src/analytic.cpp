#include "stlab/analytic.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

// kappa solver. The integral equation int_mu^kappa du/(lambda - u^gamma) = a
// is first reduced to lambda = 1 through the exact scaling
//   kappa_a(lambda, mu) = lambda^{1/gamma} kappa_{a'}(1, mu')
// with a' = a lambda^{(gamma-1)/gamma}, mu' = mu lambda^{-1/gamma}, so the
// fixed point sits at u* = 1. The integrand pole at u* is subtracted
// analytically and the remainder is handled by Gauss-Legendre panels; the
// root in kappa is found on the distance-to-pole variable t = |kappa' - 1|,
// which stays well conditioned however close kappa gets to the fixed point.

namespace stlab {

namespace {

constexpr int kGlN = 64;

struct GlTable {
  std::array<double, kGlN> x{};
  std::array<double, kGlN> w{};
};

const GlTable& gl_table() {
  static const GlTable t = [] {
    GlTable g;
    const int n = kGlN;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        double dx = p0 / pp;
        x -= dx;
        if (std::fabs(dx) < 1e-16) break;
      }
      g.x[i] = -x;
      g.x[n - 1 - i] = x;
      g.w[i] = 2.0 / ((1.0 - x * x) * pp * pp);
      g.w[n - 1 - i] = g.w[i];
    }
    return g;
  }();
  return t;
}

template <typename F>
double gl_integrate(F&& f, double a, double b) {
  const auto& t = gl_table();
  const double c = 0.5 * (b - a), m = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < kGlN; ++i) s += t.w[i] * f(m + c * t.x[i]);
  return c * s;
}

// 1 - w^gamma evaluated without cancellation near w = 1.
inline double one_minus_pow(double w, double gamma) {
  return -std::expm1(gamma * std::log(w));
}

// Subtracted integrands: smooth across the pole at w = 1.
inline double r_below(double w, double gamma) {
  double lw = std::log(w);  // < 0
  return -1.0 / std::expm1(gamma * lw) + 1.0 / (gamma * std::expm1(lw));
}
inline double r_above(double w, double gamma) {
  double lw = std::log(w);  // > 0
  return 1.0 / std::expm1(gamma * lw) - 1.0 / (gamma * std::expm1(lw));
}

// int_U^infty dw/(w^gamma - 1) = sum_{j>=1} U^{1-gamma j}/(gamma j - 1),
// valid (and fast) for U >= 2.
double far_tail_above(double U, double gamma) {
  const double ug = std::pow(U, -gamma);
  double upow = std::pow(U, 1.0 - gamma);
  double sum = 0.0;
  for (int j = 1; j < 400; ++j) {
    double t = upow / (gamma * j - 1.0);
    sum += t;
    if (t < 1e-18 * sum) break;
    upow *= ug;
  }
  return sum;
}

// A_below(t) = int_{mu'}^{1-t} dw/(1 - w^gamma), 0 < t <= 1 - mu'.
double a_below(double t, double mu, double gamma) {
  const double k = 1.0 - t;
  const double split = 0.5;
  if (k <= split)
    return gl_integrate(
        [gamma](double w) { return 1.0 / one_minus_pow(w, gamma); }, mu, k);
  double lo = std::max(mu, split);
  double acc = 0.0;
  if (mu < split)
    acc += gl_integrate(
        [gamma](double w) { return 1.0 / one_minus_pow(w, gamma); }, mu, split);
  acc += gl_integrate([gamma](double w) { return r_below(w, gamma); }, lo, k);
  acc += std::log((1.0 - lo) / t) / gamma;
  return acc;
}

// A_above(t) = int_{1+t}^{mu'} dw/(w^gamma - 1), mu' in (1, inf].
double a_above(double t, double mu, double gamma) {
  const double k = 1.0 + t;
  const double split = 2.0;
  double acc = 0.0;
  if (k < split) {
    double hi = std::min(mu, split);
    acc += gl_integrate([gamma](double w) { return r_above(w, gamma); }, k, hi);
    acc += std::log((hi - 1.0) / t) / gamma;
  }
  double far_lo = std::max(k, split);
  if (std::isinf(mu)) {
    acc += far_tail_above(far_lo, gamma);
  } else if (mu > far_lo) {
    // log substitution keeps the panel well resolved for large mu'
    acc += gl_integrate(
        [gamma](double z) {
          double w = std::exp(z);
          return w / std::expm1(gamma * z);
        },
        std::log(far_lo), std::log(mu));
  }
  return acc;
}

struct ScaledSolve {
  double kappa = 0.0;  // kappa' in lambda=1 coordinates
  double defect = 0.0; // |A(t) - a'|
};

// Solve A(t) = a by safeguarded Newton in tau = log t. The caller has
// already checked that the root lies in [t_floor, t_max].
template <typename AF, typename DF>
ScaledSolve solve_branch(AF&& A, DF&& dA_dtau, double a, double t_floor,
                         double t_max, bool below) {
  double tau_lo = std::log(t_floor), tau_hi = std::log(t_max);
  double f_hi = A(t_max) - a;  // A decreasing in t, so f_hi <= 0
  if (f_hi > 0.0) return {below ? 1.0 - t_max : 1.0 + t_max, std::fabs(f_hi)};
  double tau = 0.5 * (tau_lo + tau_hi);
  double f = A(std::exp(tau)) - a;
  for (int it = 0; it < 200; ++it) {
    if (std::fabs(f) <= 1e-14 * std::max(1.0, a)) break;
    if (f > 0.0)
      tau_lo = tau;
    else
      tau_hi = tau;
    double d = dA_dtau(std::exp(tau));
    double tau_n = (d != 0.0) ? tau - f / d : tau;
    if (!(tau_n > tau_lo) || !(tau_n < tau_hi)) tau_n = 0.5 * (tau_lo + tau_hi);
    if (tau_n == tau) break;
    tau = tau_n;
    f = A(std::exp(tau)) - a;
  }
  double t = std::exp(tau);
  return {below ? 1.0 - t : 1.0 + t, std::fabs(f)};
}

}  // namespace

KappaSolution kappa_solve(double a, double lambda, double mu,
                          const ModelParams& p) {
  if (!(a > 0.0)) throw std::domain_error("kappa_solve: a must be > 0");
  if (lambda < 0.0 || std::isnan(lambda) || mu < 0.0)
    throw std::domain_error("kappa_solve: need lambda >= 0, mu >= 0");
  const double g = p.gamma;

  KappaSolution sol;
  sol.a = a;
  sol.lambda = lambda;
  sol.mu = mu;

  if (lambda == 0.0) {
    sol.value = cumulant_u(a, mu, p);
    // defect of the closed-form reduction int_kappa^mu u^-gamma du = a
    if (mu == 0.0) {
      sol.residual = 0.0;
    } else if (std::isinf(mu)) {
      sol.residual =
          std::fabs(std::pow(sol.value, 1.0 - g) / (g - 1.0) - a);
    } else {
      sol.residual = std::fabs(
          (std::pow(sol.value, 1.0 - g) - std::pow(mu, 1.0 - g)) / (g - 1.0) -
          a);
    }
    return sol;
  }

  const double ustar = std::pow(lambda, 1.0 / g);
  const double mu_s = std::isinf(mu) ? mu_infinity : mu / ustar;
  const double a_s = a * lambda / ustar;  // a * lambda^{(gamma-1)/gamma}

  // fixed point and its linearized neighbourhood
  if (!std::isinf(mu_s) && std::fabs(mu_s - 1.0) <= 1e-8) {
    double ks = 1.0 + (mu_s - 1.0) * std::exp(-g * a_s);
    sol.value = (mu_s == 1.0) ? ustar : ustar * ks;
    sol.residual = 0.0;
    return sol;
  }

  ScaledSolve s;
  if (mu_s < 1.0) {
    auto A = [&](double t) { return a_below(t, mu_s, g); };
    auto dA = [&](double t) {
      return -t / one_minus_pow(1.0 - t, g);  // dA/dtau, tau = log t
    };
    const double t_max = 1.0 - mu_s;
    const double t_floor = 1e-8 * std::min(1.0, t_max);
    double a_floor = A(t_floor);
    if (a_s >= a_floor) {
      // inside the pole-dominated zone: continuation in log t is exact
      // to O(t_floor)
      double t = t_floor * std::exp(-g * (a_s - a_floor));
      s = {1.0 - t, 0.0};
    } else {
      s = solve_branch(A, dA, a_s, t_floor, t_max, true);
    }
  } else {
    auto A = [&](double t) { return a_above(t, mu_s, g); };
    auto dA = [&](double t) {
      return -t / std::expm1(g * std::log1p(t));  // dA/dtau, tau = log t
    };
    const double t_max = std::isinf(mu_s) ? 1e12 : mu_s - 1.0;
    const double t_floor = 1e-8 * std::min(1.0, t_max);
    double a_floor = A(t_floor);
    if (a_s >= a_floor) {
      double t = t_floor * std::exp(-g * (a_s - a_floor));
      s = {1.0 + t, 0.0};
    } else if (std::isinf(mu_s) && a_above(t_max, mu_infinity, g) > a_s) {
      // kappa' beyond the bracket ceiling: pure power-law regime,
      // int_k^inf u^-gamma du = a  up to O(k^-gamma) corrections
      double k = std::pow(a_s * (g - 1.0), -1.0 / (g - 1.0));
      s = {k, 0.0};
    } else {
      s = solve_branch(A, dA, a_s, t_floor, t_max, false);
    }
  }

  sol.value = ustar * s.kappa;
  sol.residual = s.defect * ustar / lambda;  // back to original variables
  if (s.defect > 1e-9 * std::max(1.0, a_s)) {
    std::ostringstream os;
    os << "kappa_solve: root finder failed, scaled residual " << s.defect
       << " at a=" << a << " lambda=" << lambda << " mu=" << mu;
    throw std::runtime_error(os.str());
  }
  return sol;
}

}  // namespace stlab

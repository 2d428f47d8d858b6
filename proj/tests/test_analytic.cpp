#include <doctest.h>

#include <cmath>
#include <vector>

#include "stlab/analytic.hpp"
#include "stlab/model.hpp"
#include "stlab/special.hpp"

using namespace stlab;

namespace {
const double kSqrtPi = std::sqrt(M_PI);
}

TEST_CASE("gamma function matches tabulated values to 1e-12") {
  struct Row {
    double x, value;
  };
  // reference values computed with mpmath at 30 digits
  const Row rows[] = {
      {0.5, 1.77245385090551602729816748334},
      {1.5, 0.886226925452758013649083741671},
      {5.0, 24.0},
      {0.1, 9.51350769866873128580797989582},
      {1.0 / 3.0, 2.67893853470774763365569294097},
      {0.9, 1.06862870211931933698415422399},
      {2.7, 1.54468584585059398359098453502},
      {-0.5, -3.54490770181103205459633496668},
      {-1.5, 2.36327180120735470306422331112},
      {-0.3, -4.32685110882519272045577265645},
      {-0.7, -4.27366998241084336111858920517},
  };
  for (const auto& r : rows)
    CHECK(gamma_fn(r.x) == doctest::Approx(r.value).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
  CHECK_THROWS_AS(gamma_fn(-2.0), std::domain_error);
  CHECK(rgamma_fn(-3.0) == 0.0);
  CHECK(rgamma_fn(2.5) == doctest::Approx(1.0 / gamma_fn(2.5)).epsilon(1e-14));
}

TEST_CASE("extinction intensity v(a)") {
  CHECK(extinction_intensity(1.0, ModelParams(2.0)) == doctest::Approx(1.0));
  CHECK(extinction_intensity(1.0, ModelParams(1.5)) == doctest::Approx(4.0));
  CHECK(extinction_intensity(2.0, ModelParams(1.5)) == doctest::Approx(1.0));
  ModelParams p(1.7);
  double prev = extinction_intensity(0.01, p);
  for (double a : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    double v = extinction_intensity(a, p);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(extinction_intensity(0.0, ModelParams(1.5)),
                  std::domain_error);
  CHECK_THROWS_AS(extinction_intensity(-1.0, ModelParams(1.5)),
                  std::domain_error);
}

TEST_CASE("cumulant u_a(mu): values, limit, semigroup") {
  CHECK(cumulant_u(1.0, 1.0, ModelParams(2.0)) == doctest::Approx(0.5));
  CHECK(cumulant_u(1.0, 1.0, ModelParams(1.5)) ==
        doctest::Approx(4.0 / 9.0).epsilon(1e-14));
  CHECK(cumulant_u(1.0, mu_infinity, ModelParams(1.5)) ==
        doctest::Approx(4.0).epsilon(1e-14));

  for (double g : {1.3, 1.5, 1.8, 2.0}) {
    ModelParams p(g);
    for (double a : {0.1, 0.5, 1.0, 2.0})
      for (double b : {0.25, 1.0, 3.0})
        for (double mu : {0.01, 0.5, 1.0, 10.0, 1e4}) {
          double lhs = cumulant_u(a + b, mu, p);
          double rhs = cumulant_u(a, cumulant_u(b, mu, p), p);
          CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
  }
}

TEST_CASE("laplace_Na values and the algebraic identity with u and v") {
  CHECK(laplace_Na(1.0, 1.0, ModelParams(2.0)) == doctest::Approx(0.5));
  CHECK(laplace_Na(1.0, 1.0, ModelParams(1.5)) ==
        doctest::Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(laplace_Na(0.0, 3.7, ModelParams(1.4)) == 1.0);

  for (double g : {1.2, 1.5, 1.8, 2.0}) {
    ModelParams p(g);
    for (double a : {0.1, 1.0, 5.0})
      for (double mu : {1e-3, 0.5, 1.0, 2.0, 5.0, 1e3}) {
        double direct = laplace_Na(mu, a, p);
        double via_u = 1.0 - cumulant_u(a, mu, p) / extinction_intensity(a, p);
        CHECK(std::fabs(direct - via_u) < 1e-12);
      }
  }
}

TEST_CASE("kappa fixed point is exact") {
  for (double g : {1.3, 1.5, 1.8, 2.0}) {
    ModelParams p(g);
    for (double lambda : {0.1, 1.0, 7.0})
      for (double a : {0.2, 1.0, 10.0}) {
        double mu = std::pow(lambda, 1.0 / g);
        auto s = kappa_solve(a, lambda, mu, p);
        CHECK(s.value == mu);  // exact, not approximate
      }
  }
}

TEST_CASE("kappa at gamma=2 matches the tanh closed form") {
  ModelParams p(2.0);
  auto s = kappa_solve(1.0, 1.0, 0.0, p);
  CHECK(s.value == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
  CHECK(s.residual < 1e-10);

  for (double a : {0.1, 0.7, 1.0, 3.0})
    for (double lambda : {0.05, 0.5, 1.0, 4.0})
      for (double mu : {0.0, 0.3, 1.0, 2.5, 40.0, mu_infinity}) {
        auto sol = kappa_solve(a, lambda, mu, p);
        double oracle = kappa_quadratic(a, lambda, mu);
        CHECK(sol.value == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(sol.residual < 1e-10);
      }
}

TEST_CASE("kappa reduces to u at lambda=0") {
  ModelParams p(1.5);
  auto s = kappa_solve(1.0, 0.0, 1.0, p);
  CHECK(s.value == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
  for (double g : {1.3, 1.8}) {
    ModelParams q(g);
    for (double a : {0.5, 2.0})
      for (double mu : {0.2, 1.0, mu_infinity})
        CHECK(kappa_solve(a, 0.0, mu, q).value ==
              doctest::Approx(cumulant_u(a, mu, q)).epsilon(1e-13));
  }
}

TEST_CASE("kappa semigroup") {
  for (double g : {1.3, 1.5, 1.8, 2.0}) {
    ModelParams p(g);
    for (double lambda : {0.2, 1.0, 3.0})
      for (double a : {0.3, 1.0})
        for (double b : {0.5, 2.0})
          for (double mu : {0.0, 0.4, 1.9, 30.0, mu_infinity}) {
            double inner = kappa_solve(b, lambda, mu, p).value;
            double lhs = kappa_solve(a, lambda, inner, p).value;
            double rhs = kappa_solve(a + b, lambda, mu, p).value;
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
          }
  }
}

TEST_CASE("kappa scaling property") {
  for (double g : {1.4, 1.8}) {
    ModelParams p(g);
    double e1 = 1.0 / (g - 1.0);
    for (double c : {0.3, 2.0, 9.0})
      for (double a : {0.5, 1.5})
        for (double lambda : {0.4, 2.0})
          for (double mu : {0.0, 0.8, 5.0}) {
            double lhs = std::pow(c, e1) *
                         kappa_solve(a, std::pow(c, -g * e1) * lambda,
                                     std::pow(c, -e1) * mu, p)
                             .value;
            double rhs = kappa_solve(a / c, lambda, mu, p).value;
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
          }
  }
}

TEST_CASE("kappa small-lambda expansions (Eq 3.2 / 3.3 shape)") {
  // kappa_1(l, inf) = v(1) + (g-1)/(2g-1) l + O(l^2)
  for (double g : {1.3, 1.5, 1.8}) {
    ModelParams p(g);
    double v1 = extinction_intensity(1.0, p);
    double c1 = (kappa_solve(1.0, 1e-4, mu_infinity, p).value - v1) / 1e-4;
    double c2 = (kappa_solve(1.0, 1e-5, mu_infinity, p).value - v1) / 1e-5;
    double richardson = (10.0 * c2 - c1) / 9.0;
    double target = (g - 1.0) / (2.0 * g - 1.0);
    CHECK(richardson == doctest::Approx(target).epsilon(0.01));
    CHECK(std::fabs(c2 / c1 - 1.0) < 0.01);
  }
  // kappa_{1+c}(l, 0) = (1+c) l - (1+c)^{g+1}/(g+1) l^g + o(l^g)
  for (double g : {1.3, 1.5, 1.8}) {
    ModelParams p(g);
    for (double c : {0.0, 1.0}) {
      auto coef = [&](double l) {
        return (kappa_solve(1.0 + c, l, 0.0, p).value - (1.0 + c) * l) /
               std::pow(l, g);
      };
      double target = -std::pow(1.0 + c, g + 1.0) / (g + 1.0);
      double c2 = coef(1e-5);
      CHECK(c2 == doctest::Approx(target).epsilon(0.02));
    }
  }
}

TEST_CASE("kappa monotone in mu and bounded by the fixed point") {
  ModelParams p(1.6);
  double lambda = 1.3, a = 0.8;
  double ustar = std::pow(lambda, 1.0 / 1.6);
  double prev = -1.0;
  for (double mu : {0.0, 0.2, 0.5, 0.9, 1.0, 1.3, 2.0, 10.0}) {
    double k = kappa_solve(a, lambda, mu * ustar, p).value;
    CHECK(k > prev);
    prev = k;
  }
  CHECK(kappa_solve(a, lambda, 0.5 * ustar, p).value < ustar);
  CHECK(kappa_solve(a, lambda, 2.0 * ustar, p).value > ustar);
}

TEST_CASE("tail asymptotics closed forms") {
  ModelParams p(1.5);
  CHECK(tail_asymptotics(TailKind::local_time_left, 1.0, 0.0, p) ==
        doctest::Approx(8.0 / kSqrtPi).epsilon(1e-13));
  CHECK(tail_asymptotics(TailKind::local_time_right, 1.0, 0.0, p) ==
        doctest::Approx(1.0 / (8.0 * kSqrtPi)).epsilon(1e-13));
  double ratio = tail_asymptotics(TailKind::ball_mass_right, 1.0, 1.0, p) /
                 tail_asymptotics(TailKind::ball_mass_right, 1.0, 0.0, p);
  CHECK(ratio == doctest::Approx(std::pow(2.0, 2.5)).epsilon(1e-13));

  for (double g : {1.2, 1.5, 1.9}) {
    ModelParams q(g);
    for (double x : {0.01, 1.0, 100.0}) {
      CHECK(tail_asymptotics(TailKind::local_time_left, x, 0.0, q) > 0.0);
      CHECK(tail_asymptotics(TailKind::local_time_right, x, 0.0, q) > 0.0);
      CHECK(tail_asymptotics(TailKind::ball_mass_right, x, 0.5, q) > 0.0);
    }
  }
  ModelParams crt(2.0);
  CHECK_THROWS_AS(tail_asymptotics(TailKind::local_time_right, 1.0, 0.0, crt),
                  std::domain_error);
  CHECK_THROWS_AS(tail_asymptotics(TailKind::ball_mass_right, 1.0, 0.0, crt),
                  std::domain_error);
  CHECK_THROWS_AS(tail_asymptotics(TailKind::local_time_left, -1.0, 0.0, p),
                  std::domain_error);
}

TEST_CASE("gauge functions") {
  ModelParams p(2.0);
  CHECK(gauges(GaugeKind::log_g, std::exp(-1.0), p) == doctest::Approx(1.0));
  CHECK(gauges(GaugeKind::log_g, std::exp(-2.0), p) == doctest::Approx(0.5));
  double r = std::exp(-std::exp(2.0));
  CHECK(gauges(GaugeKind::g_gamma, r, p) ==
        doctest::Approx(r * r / 2.0).epsilon(1e-12));
  CHECK(gauges(GaugeKind::loglog_h, r, p) == doctest::Approx(0.5));
  // f at gamma=2 is r^2 log(1/r)
  CHECK(gauges(GaugeKind::f_gamma, 0.01, p) ==
        doctest::Approx(1e-4 * std::log(100.0)).epsilon(1e-12));
  CHECK_THROWS_AS(gauges(GaugeKind::log_g, 1.5, p), std::domain_error);
  CHECK_THROWS_AS(gauges(GaugeKind::g_gamma, 0.9, p), std::domain_error);
  for (double g : {1.3, 1.7}) {
    ModelParams q(g);
    for (double rr : {1e-3, 1e-6})
      for (auto kind : {GaugeKind::g_gamma, GaugeKind::f_gamma,
                        GaugeKind::log_g, GaugeKind::loglog_h})
        CHECK(gauges(kind, rr, q) > 0.0);
  }
}

TEST_CASE("Poisson Chernoff bound: examples and domination") {
  CHECK(chernoff_poisson(1.0, 2.0, ChernoffSide::upper) ==
        doctest::Approx(M_E / 4.0).epsilon(1e-13));
  CHECK(chernoff_poisson(1.0, 1.0, ChernoffSide::lower) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(chernoff_poisson(3.0, 3.0, ChernoffSide::upper) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(chernoff_poisson(5.0, 1.0, ChernoffSide::upper),
                  std::domain_error);
  CHECK_THROWS_AS(chernoff_poisson(1.0, 5.0, ChernoffSide::lower),
                  std::domain_error);

  // exact Poisson tails by direct summation, independent of gamma_q
  auto exact_sf = [](double lam, uint64_t k) {  // P(X >= k)
    double term = std::exp(-lam), cdf = 0.0;
    for (uint64_t j = 0; j < k; ++j) {
      cdf += term;
      term *= lam / static_cast<double>(j + 1);
    }
    return 1.0 - cdf;
  };
  auto exact_cdf = [](double lam, uint64_t k) {  // P(X <= k)
    double term = std::exp(-lam), cdf = 0.0;
    for (uint64_t j = 0; j <= k; ++j) {
      cdf += term;
      term *= lam / static_cast<double>(j + 1);
    }
    return cdf;
  };
  CHECK(exact_sf(1.0, 2) == doctest::Approx(1.0 - 2.0 / M_E).epsilon(1e-12));
  CHECK(exact_cdf(1.0, 1) == doctest::Approx(2.0 / M_E).epsilon(1e-12));

  for (double lam : {0.1, 1.0, 10.0}) {
    uint64_t kmax = static_cast<uint64_t>(5.0 * lam + 20.0);
    for (uint64_t k = 0; k <= kmax; ++k) {
      double y = static_cast<double>(k);
      if (y >= lam)
        CHECK(chernoff_poisson(lam, y, ChernoffSide::upper) >=
              exact_sf(lam, k) - 1e-12);
      if (y <= lam)
        CHECK(chernoff_poisson(lam, y, ChernoffSide::lower) >=
              exact_cdf(lam, k) - 1e-12);
    }
  }

  // gamma_q based tails agree with the direct sums
  for (double lam : {0.5, 4.0})
    for (uint64_t k : {0ull, 1ull, 3ull, 9ull}) {
      CHECK(poisson_sf(lam, k) == doctest::Approx(exact_sf(lam, k)).epsilon(1e-10));
      CHECK(poisson_cdf(lam, k) ==
            doctest::Approx(exact_cdf(lam, k)).epsilon(1e-10));
    }
}

TEST_CASE("kappa residuals stay within contract") {
  for (double g : {1.3, 1.5, 1.8, 2.0}) {
    ModelParams p(g);
    for (double a : {0.1, 1.0, 20.0})
      for (double lambda : {1e-6, 0.1, 1.0, 100.0})
        for (double mu : {0.0, 0.01, 1.0, 1e4, mu_infinity}) {
          auto s = kappa_solve(a, lambda, mu, p);
          CHECK(s.residual <= 1e-10);
          CHECK(std::isfinite(s.value));
          CHECK(s.value >= 0.0);
        }
  }
}

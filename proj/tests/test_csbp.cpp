#include <doctest.h>

#include <cmath>
#include <vector>

#include "stlab/csbp.hpp"
#include "stlab/stats.hpp"

using namespace stlab;

namespace {
const LocalTimeLawTable& table15() {
  static auto t = LocalTimeLawTable::build(ModelParams(1.5), 512);
  return t;
}
const LocalTimeLawTable& table20() {
  static auto t = LocalTimeLawTable::build(ModelParams(2.0), 512);
  return t;
}
}  // namespace

TEST_CASE("csbp_step: absorbing state and exact extinction probability") {
  RandomStream rng(1);
  CHECK(csbp_step(0.0, 1.0, table15(), rng) == 0.0);

  // P(X_delta = 0 | x) = exp(-x v(delta)); gamma=2, x=1, delta=1 -> 1/e
  const std::size_t n = 20000;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i)
    zeros += (csbp_step(1.0, 1.0, table20(), rng) == 0.0);
  double freq = static_cast<double>(zeros) / n;
  double target = std::exp(-1.0);
  CHECK(std::fabs(freq - target) <= 4.0 * freq_se(freq, n));
}

TEST_CASE("csbp_step: Laplace transform is exp(-x u_delta(mu))") {
  ModelParams p(1.5);
  RandomStream rng(2);
  const std::size_t n = 30000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = csbp_step(1.0, 1.0, table15(), rng);

  // MC average of e^{-X} -> exp(-u_1(1)) = e^{-4/9}
  std::vector<double> es(n);
  for (std::size_t i = 0; i < n; ++i) es[i] = std::exp(-xs[i]);
  auto m = mean_se(es);
  CHECK(std::fabs(m.mean - std::exp(-4.0 / 9.0)) <= 3.0 * m.se);

  for (double mu : {0.5, 2.0, 5.0}) {
    for (std::size_t i = 0; i < n; ++i) es[i] = std::exp(-mu * xs[i]);
    auto mm = mean_se(es);
    double target = std::exp(-cumulant_u(1.0, mu, p));
    CHECK(std::fabs(mm.mean - target) <= 4.0 * mm.se);
  }
}

TEST_CASE("csbp_path: zero start, survival, and refinement consistency") {
  ModelParams p(1.5);
  RandomStream rng(3);
  auto zero = csbp_path(0.0, 1.0, 0.125, table15(), rng);
  for (double v : zero.values) CHECK(v == 0.0);
  CHECK(zero.absorbed);

  // survival to horizon 1 from x0=1: 1 - exp(-v(1)) = 1 - e^{-4}
  const std::size_t n = 20000;
  std::size_t alive = 0;
  for (std::size_t i = 0; i < n; ++i)
    alive += !csbp_path(1.0, 1.0, 0.25, table15(), rng).absorbed;
  double freq = static_cast<double>(alive) / n;
  double target = -std::expm1(-4.0);
  CHECK(std::fabs(freq - target) <= 3.0 * freq_se(freq, n));

  // law of X_1 must not depend on the step size (exact transitions)
  const std::size_t m = 10000;
  std::vector<double> one_step, eight_steps;
  one_step.reserve(m);
  eight_steps.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    one_step.push_back(csbp_path(1.0, 1.0, 1.0, table15(), rng).values.back());
    eight_steps.push_back(
        csbp_path(1.0, 1.0, 0.125, table15(), rng).values.back());
  }
  CHECK(ks_test2(one_step, eight_steps).p_value > 0.01);
}

TEST_CASE("poisson branch-count side channel has matching mean and variance") {
  // N inside csbp_step is Poisson(x v(delta)); check via the zero-mass law:
  // with x=0.5, delta=1, gamma=1.5: lambda = 0.5 * 4 = 2
  ModelParams p(1.5);
  RandomStream rng(4);
  const double lambda = 0.5 * extinction_intensity(1.0, p);
  const std::size_t n = 40000;
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = static_cast<double>(rng.poisson(lambda));
    s += v;
    q += v * v;
  }
  double mean = s / n, var = q / n - mean * mean;
  CHECK(std::fabs(mean - lambda) <= 3.0 * std::sqrt(lambda / n));
  CHECK(var == doctest::Approx(lambda).epsilon(0.05));
}

TEST_CASE("path functionals on hand-checkable paths") {
  CsbpPath path;
  path.delta = 1.0;
  path.values = {0.0, 0.0, 0.0};
  auto f = path_functionals(path, 1.0, 2);
  CHECK(f.sup == 0.0);
  CHECK(f.inf == 0.0);
  CHECK(f.theta == theta_never);

  path.values = {3.0, 2.0, 1.0, 0.0};
  f = path_functionals(path, 1.0, 2);
  CHECK(f.theta == 0);  // X_0 = 3 >= 2 Lambda
  CHECK(f.post_hitting_inf == 2.0);  // min over {X_0, X_1}
  CHECK(f.sup == 3.0);
  CHECK(f.inf == 0.0);

  // window clipped at the path end
  f = path_functionals(path, 1.0, 50);
  CHECK(f.post_hitting_inf == 0.0);
}

TEST_CASE("bound constants and endpoints") {
  CHECK(small_mass_const(ModelParams(2.0)) == doctest::Approx(0.25));
  CHECK(small_mass_const(ModelParams(1.5)) == doctest::Approx(2.0 / 9.0));
  // the infimum bound at y=0 equals the extinction probability exactly
  ModelParams p(1.7);
  for (double x : {0.5, 2.0})
    for (double d : {0.25, 1.0})
      CHECK(infimum_prob_bound(x, 0.0, d, p) ==
            doctest::Approx(std::exp(-x * extinction_intensity(d, p)))
                .epsilon(1e-12));
  // and at y=x the bound is trivial
  CHECK(infimum_prob_bound(1.3, 1.3, 0.5, p) == doctest::Approx(1.0));
}

TEST_CASE("tail bound verification passes on a reduced grid") {
  ModelParams p(1.5);
  auto report = verify_tail_bounds(p, table15(), 4000, 2024);
  for (const auto& row : report.rows) {
    INFO("check ", row.check, " x=", row.x, " y=", row.y_or_rho,
         " delta=", row.delta, " bound=", row.bound, " freq=", row.freq);
    CHECK(row.pass);
  }
  CHECK(report.all_pass);
  CHECK(report.sup_shape_fitted_c > 0.0);
  CHECK(report.sup_shape_c_spread < 6.0);
}

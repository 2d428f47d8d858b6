#include <doctest.h>

#include <cmath>
#include <vector>

#include "stlab/rng.hpp"
#include "stlab/stats.hpp"

using namespace stlab;

TEST_CASE("random streams are deterministic and seed-separated") {
  RandomStream a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    uint64_t x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    all_equal &= (x == y);
    any_diff |= (x != z);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  CHECK(derive_seed(1, 0, "stage") != derive_seed(1, 1, "stage"));
  CHECK(derive_seed(1, 0, "stage") != derive_seed(1, 0, "other"));
  CHECK(derive_seed(1, 7, "s") == derive_seed(1, 7, "s"));
}

TEST_CASE("uniform and exponential samplers look right") {
  RandomStream rng(7);
  const int n = 200000;
  std::vector<double> us(n);
  for (auto& u : us) u = rng.u01();
  auto ks = ks_test(us, [](double x) { return std::min(1.0, std::max(0.0, x)); });
  CHECK(ks.p_value > 0.01);

  double s = 0.0;
  for (int i = 0; i < n; ++i) s += rng.exponential();
  CHECK(s / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson sampler: moments across the lambda regimes") {
  RandomStream rng(11);
  for (double lambda : {0.5, 3.0, 25.0, 400.0, 20000.0}) {
    const int n = 40000;
    double s = 0.0, q = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = static_cast<double>(rng.poisson(lambda));
      s += v;
      q += v * v;
    }
    double mean = s / n;
    double var = q / n - mean * mean;
    double se_mean = std::sqrt(lambda / n);
    CHECK(std::fabs(mean - lambda) < 4.0 * se_mean);
    CHECK(var == doctest::Approx(lambda).epsilon(0.1));
  }
}

TEST_CASE("poisson sampler matches the exact pmf (chi-square)") {
  RandomStream rng(5);
  for (double lambda : {2.0, 17.0, 64.0}) {
    const std::size_t n = 50000;
    std::vector<uint64_t> xs(n);
    for (auto& x : xs) x = rng.poisson(lambda);
    auto r = chi2_poisson_gof(xs, lambda);
    CHECK(r.p_value > 0.001);
  }
  // and rejects a wrong lambda
  std::vector<uint64_t> xs(50000);
  for (auto& x : xs) x = rng.poisson(10.0);
  CHECK(chi2_poisson_gof(xs, 11.0).p_value < 1e-6);
}

TEST_CASE("one-sample KS accepts the truth and rejects a shift") {
  RandomStream rng(3);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = rng.exponential();
  auto cdf_exp = [](double x) { return x > 0 ? -std::expm1(-x) : 0.0; };
  CHECK(ks_test(xs, cdf_exp).p_value > 0.01);
  auto cdf_scaled = [](double x) { return x > 0 ? -std::expm1(-x / 1.15) : 0.0; };
  CHECK(ks_test(xs, cdf_scaled).p_value < 0.001);
}

TEST_CASE("two-sample KS") {
  RandomStream rng(9);
  std::vector<double> a(4000), b(4000), c(4000);
  for (auto& x : a) x = rng.exponential();
  for (auto& x : b) x = rng.exponential();
  for (auto& x : c) x = 1.2 * rng.exponential();
  CHECK(ks_test2(a, b).p_value > 0.01);
  CHECK(ks_test2(a, c).p_value < 0.001);
}

TEST_CASE("OLS recovers an exact line and a noisy slope") {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double xi : x) y.push_back(3.0 - 2.0 * xi);
  auto f = ols_fit(x, y);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("median and quantile") {
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
  std::vector<double> xs;
  for (int i = 0; i < 1001; ++i) xs.push_back(static_cast<double>(i));
  CHECK(quantile(xs, 0.25) == doctest::Approx(250.0));
}

TEST_CASE("tail-corrected mean on the exponential law") {
  RandomStream rng(21);
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.exponential();
  const double T = 6.0;
  // E[X 1{X>T}] = (T+1) e^{-T} for Exponential(1)
  auto r = tail_corrected_mean(xs, T, (T + 1.0) * std::exp(-T));
  CHECK(std::fabs(r.mean - 1.0) < 4.0 * r.se);
  CHECK(r.se < 0.01);
}

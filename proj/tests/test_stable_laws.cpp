#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "stlab/analytic.hpp"
#include "stlab/laplace.hpp"
#include "stlab/local_time_law.hpp"
#include "stlab/offspring.hpp"
#include "stlab/stats.hpp"

using namespace stlab;

TEST_CASE("Talbot inversion reproduces known transforms") {
  // 1/(s+1) -> e^{-x}
  auto f = [](std::complex<double> s) { return 1.0 / (s + 1.0); };
  for (double x : {1e-6, 1e-3, 0.1, 1.0, 5.0, 20.0})
    CHECK(talbot_invert(f, x) == doctest::Approx(std::exp(-x)).epsilon(1e-10));
  // 1/s^2 -> x
  auto g = [](std::complex<double> s) { return 1.0 / (s * s); };
  for (double x : {0.5, 2.0, 100.0})
    CHECK(talbot_invert(g, x) == doctest::Approx(x).epsilon(1e-10));
}

TEST_CASE("survival function: Talbot, series and asymptotics agree") {
  for (double g : {1.3, 1.5, 1.8}) {
    ModelParams p(g);
    // series oracle in the small/moderate range
    for (double x : {1e-4, 0.01, 0.1, 0.5, 1.0, 2.0}) {
      double talbot = LocalTimeLawTable::survival_by_talbot(x, p);
      double series = LocalTimeLawTable::survival_by_series(x, p);
      if (!std::isnan(series))
        CHECK(talbot == doctest::Approx(series).epsilon(1e-6));
    }
    // asymptotic oracle in the tail
    for (double x : {50.0, 200.0, 1000.0}) {
      double talbot = LocalTimeLawTable::survival_by_talbot(x, p);
      double asym = LocalTimeLawTable::survival_by_asymptotic(x, p);
      CHECK(talbot == doctest::Approx(asym).epsilon(2e-3));
    }
    // leading term carries the closed-form tail coefficient
    double x = 500.0;
    double lead = tail_asymptotics(TailKind::local_time_right, x, 0.0, p);
    CHECK(LocalTimeLawTable::survival_by_talbot(x, p) ==
          doctest::Approx(lead).epsilon(0.05));
  }
}

TEST_CASE("gamma=2 table reproduces Exponential(1)") {
  ModelParams p(2.0);
  auto table = LocalTimeLawTable::build(p, 2048);
  CHECK(table.quantile(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  for (double x : {0.01, 0.5, 1.0, 3.0, 7.0})
    CHECK(table.cdf(x) == doctest::Approx(-std::expm1(-x)).epsilon(1e-5));

  RandomStream rng(17);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = table.sample(1.0, rng);
  auto ks = ks_test(xs, [](double x) { return x > 0 ? -std::expm1(-x) : 0.0; });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("table law matches laplace_Na by Monte Carlo (4 SE)") {
  for (double g : {1.3, 1.5, 1.8, 2.0}) {
    ModelParams p(g);
    auto table = LocalTimeLawTable::build(p, 512);
    RandomStream rng(23);
    const std::size_t n = 30000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = table.sample(1.0, rng);
    for (double mu : {0.5, 1.0, 2.0, 5.0}) {
      std::vector<double> es(n);
      for (std::size_t i = 0; i < n; ++i) es[i] = std::exp(-mu * xs[i]);
      auto m = mean_se(es);
      double target = laplace_Na(mu, 1.0, p);
      CHECK(std::fabs(m.mean - target) <= 4.0 * m.se);
    }
  }
}

TEST_CASE("table mean equals (gamma-1)^{1/(gamma-1)}") {
  for (double g : {1.5, 1.8}) {
    ModelParams p(g);
    auto table = LocalTimeLawTable::build(p, 1024);
    // integrate the quantile function: table part + closed-form tail piece
    const double uj = table.diagnostics().junction_u;
    const double xj = table.diagnostics().junction_x;
    const int steps = 200000;
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
      double u = (i + 0.5) / steps;
      if (u >= uj) break;
      acc += table.quantile(u) / steps;
    }
    // stitched right-tail mass: int_{uj}^1 xj ((1-uj)/(1-u))^{1/g} du
    double tail = xj * (1.0 - uj) / (1.0 - 1.0 / g);
    double mean_est = acc + tail;
    CHECK(mean_est == doctest::Approx(table.mean()).epsilon(0.01));
  }
  CHECK(LocalTimeLawTable::build(ModelParams(1.5), 512).mean() ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic and scales exactly with the level") {
  ModelParams p(1.5);
  auto table = LocalTimeLawTable::build(p, 512);
  RandomStream r1(99), r2(99);
  for (int i = 0; i < 50; ++i) {
    double a = table.sample(1.0, r1);
    double b = table.sample(4.0, r2);
    CHECK(b == doctest::Approx(16.0 * a).epsilon(1e-13));
  }
}

TEST_CASE("quantile is strictly monotone (1e4 random pairs)") {
  ModelParams p(1.3);
  auto table = LocalTimeLawTable::build(p, 512);
  RandomStream rng(31);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.u01(), v = rng.u01();
    if (u == v) continue;
    double lo = std::min(u, v), hi = std::max(u, v);
    CHECK(table.quantile(lo) < table.quantile(hi));
  }
}

TEST_CASE("empirical tails match the closed-form asymptotics") {
  ModelParams p(1.5);
  auto table = LocalTimeLawTable::build(p, 1024);
  RandomStream rng(41);
  const std::size_t n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = table.sample(1.0, rng);
  std::sort(xs.begin(), xs.end());

  // right tail: survival over the top 1% .. 0.05%
  std::vector<double> lx, ly;
  for (double q : {0.99, 0.995, 0.998, 0.999, 0.9995}) {
    std::size_t k = static_cast<std::size_t>(q * n);
    lx.push_back(std::log(xs[k]));
    ly.push_back(std::log(1.0 - q));
  }
  CHECK(ols_fit(lx, ly).slope == doctest::Approx(-1.5).epsilon(0.1));

  // left tail: CDF over the bottom quantiles, slope gamma-1
  lx.clear();
  ly.clear();
  for (double q : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    std::size_t k = static_cast<std::size_t>(q * n);
    lx.push_back(std::log(xs[k]));
    ly.push_back(std::log(q));
  }
  CHECK(ols_fit(lx, ly).slope == doctest::Approx(0.5).epsilon(0.3));

  // right-tail constant on the top 0.1%
  std::size_t k = static_cast<std::size_t>(0.999 * n);
  double cr = tail_asymptotics(TailKind::local_time_right, 1.0, 0.0, p);
  double ratio = 0.001 * std::pow(xs[k], 1.5) / cr;
  CHECK(ratio > 0.7);
  CHECK(ratio < 1.3);
}

TEST_CASE("build diagnostics: junction slope and residuals") {
  for (double g : {1.3, 1.5, 1.8}) {
    ModelParams p(g);
    auto table = LocalTimeLawTable::build(p, 512);
    const auto& d = table.diagnostics();
    CHECK(d.max_residual <= 1e-6);
    CHECK(d.junction_slope == doctest::Approx(-g).epsilon(0.01 / g));
    CHECK(d.junction_coef_rel_err < 0.05);
    CHECK(d.junction_u >= 0.999);
  }
  CHECK_THROWS_AS(LocalTimeLawTable::build(ModelParams(1.5), 100),
                  std::domain_error);
}

TEST_CASE("tail expectation agrees with a direct integral") {
  ModelParams p(1.5);
  auto table = LocalTimeLawTable::build(p, 1024);
  for (double T : {0.5, 2.0, 10.0}) {
    // direct: int_T^inf x dF via the quantile representation
    double uT = table.cdf(T);
    const int steps = 400000;
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
      double u = uT + (1.0 - uT) * (i + 0.5) / steps;
      if (u >= 1.0) break;
      acc += table.quantile(std::min(u, 1.0 - 1e-12)) * (1.0 - uT) / steps;
    }
    CHECK(table.tail_expectation(T) == doctest::Approx(acc).epsilon(0.02));
  }
}

TEST_CASE("law cache round-trips") {
  ModelParams p(1.8);
  auto table = LocalTimeLawTable::build(p, 512);
  std::string path = "/tmp/stlab_law_test.csv";
  table.save(path);
  LocalTimeLawTable loaded;
  REQUIRE(LocalTimeLawTable::try_load(path, p, 512, loaded));
  RandomStream r1(5), r2(5);
  for (int i = 0; i < 200; ++i)
    CHECK(table.sample(1.0, r1) == loaded.sample(1.0, r2));
  // wrong gamma is rejected
  LocalTimeLawTable wrong;
  CHECK_FALSE(LocalTimeLawTable::try_load(path, ModelParams(1.5), 512, wrong));

  // a corrupted cache (non-monotone CDF) is rejected rather than loaded
  {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    auto last_line_start = text.rfind('\n', text.size() - 2);
    std::string corrupted = text.substr(0, last_line_start + 1) +
                            "1e-30,0.5,0\n";  // x and u both out of order
    std::ofstream out(path, std::ios::binary);
    out << corrupted;
  }
  LocalTimeLawTable broken;
  CHECK_FALSE(LocalTimeLawTable::try_load(path, p, 512, broken));
  std::remove(path.c_str());
}

TEST_CASE("offspring law: probabilities and normalization") {
  ModelParams p(1.5);
  auto law = OffspringLaw::make(p);
  CHECK(law.prob(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(law.prob(1) == 0.0);
  CHECK(law.prob(2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(law.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(law.mean_check() == doctest::Approx(1.0).epsilon(1e-9));

  for (double g : {1.3, 1.8}) {
    auto l = OffspringLaw::make(ModelParams(g));
    CHECK(l.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l.mean_check() == doctest::Approx(1.0).epsilon(1e-9));
    // tail exponent: p_k ~ tail_coef k^{-1-gamma}
    double k = 2000.0;
    CHECK(l.prob(2000) ==
          doctest::Approx(l.tail_coef() * std::pow(k, -1.0 - g)).epsilon(0.01));
  }

  auto geo = OffspringLaw::make(ModelParams(2.0));
  CHECK(geo.prob(0) == doctest::Approx(0.5));
  CHECK(geo.prob(3) == doctest::Approx(1.0 / 16.0));
  CHECK(geo.mean_check() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("offspring sampling: criticality and tail") {
  ModelParams p(1.5);
  auto law = OffspringLaw::make(p);
  RandomStream rng(77);
  const std::size_t n = 1000000;
  std::vector<double> ks(n);
  uint64_t tail_hits = 0;
  for (auto& k : ks) {
    uint64_t v = law.sample(rng);
    k = static_cast<double>(v);
    tail_hits += (v > 1000);
  }
  // trimmed mean with the exact tail remainder sum_{k>K} k p_k
  double tail_mean = 2.0 - 1.5;  // |C(gamma-2, 1)|
  for (std::size_t j = 2; j <= 1000 - 1; ++j)
    tail_mean *= (static_cast<double>(j) + 1.0 - 1.5) / static_cast<double>(j);
  double trimmed = 0.0;
  for (double k : ks) trimmed += (k <= 1000) ? k : 0.0;
  trimmed /= n;
  CHECK(trimmed + tail_mean == doctest::Approx(1.0).epsilon(0.01));

  // P(X > 1000) observed vs exact
  double t1000 = 0.5 / 1.5;  // T_1
  for (std::size_t k = 2; k <= 1000; ++k)
    t1000 *= (static_cast<double>(k) - 1.5) / static_cast<double>(k);
  double freq = static_cast<double>(tail_hits) / n;
  CHECK(std::fabs(freq - t1000) <= 4.0 * freq_se(freq, n) + 1e-9);

  // geometric control: mean 1 within 4 SE
  auto geo = OffspringLaw::make(ModelParams(2.0));
  double s = 0.0;
  for (std::size_t i = 0; i < 200000; ++i) s += geo.sample(rng);
  CHECK(s / 200000.0 == doctest::Approx(1.0).epsilon(0.02));
}

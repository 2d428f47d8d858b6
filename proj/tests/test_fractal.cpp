#include <doctest.h>

#include <cmath>
#include <vector>

#include "stlab/fractal.hpp"
#include "stlab/stats.hpp"

using namespace stlab;

namespace {

BallProfile synthetic_profile(int scales, double delta,
                              double a_ell, double a_m, double a_b,
                              double wobble = 0.0) {
  BallProfile pr;
  pr.vertex = 0;
  for (int j = 0; j < scales; ++j) {
    double r = delta * (1 << j);
    pr.radii.push_back(r);
    pr.ell.push_back(std::pow(r, a_ell));
    pr.mass.push_back(std::pow(r, a_m) * (1.0 + wobble * std::sin(double(j))));
    pr.nb.push_back(std::pow(r, -a_b) - 1.0);
  }
  return pr;
}

}  // namespace

TEST_CASE("estimators recover exact power laws to 1e-9") {
  std::vector<BallProfile> prs{synthetic_profile(7, 1.0 / 128, 2.0, 3.0, 0.5)};
  auto set = pointwise_exponents(prs);
  REQUIRE(set.estimates.size() == 1);
  const auto& e = set.estimates[0];
  CHECK(e.alpha_ell == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(e.alpha_m == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(e.alpha_b == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(e.spread_ell == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_FALSE(e.flagged);
}

TEST_CASE("perturbed power law lands within 0.05") {
  std::vector<BallProfile> prs{
      synthetic_profile(7, 1.0 / 128, 2.0, 3.0, 0.5, 0.01)};
  auto set = pointwise_exponents(prs);
  REQUIRE(set.estimates.size() == 1);
  CHECK(set.estimates[0].alpha_m == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("profiles with vanishing masses are dropped with a count") {
  auto pr = synthetic_profile(6, 1.0 / 64, 2.0, 3.0, 0.5);
  pr.ell[3] = 0.0;
  std::vector<BallProfile> prs{pr, synthetic_profile(6, 1.0 / 64, 2, 3, 0.5)};
  auto set = pointwise_exponents(prs);
  CHECK(set.estimates.size() == 1);
  CHECK(set.dropped == 1);
  // too few scales is dropped as well
  std::vector<BallProfile> small{synthetic_profile(3, 0.125, 2, 3, 0.5)};
  CHECK(pointwise_exponents(small).dropped == 1);
}

TEST_CASE("exponent relations hold exactly on synthetic data") {
  ModelParams p(1.8);
  std::vector<BallProfile> prs;
  for (int i = 0; i < 50; ++i) {
    double a_ell = 0.5 + 0.02 * i;  // spans below and above 1/(g-1)
    double a_m = a_ell + 1.0;
    double a_b = p.tree_dim() - a_m;
    if (a_b < 0.0) a_b = 0.0;
    prs.push_back(synthetic_profile(6, 1.0 / 64, a_ell, a_m,
                                    p.tree_dim() - (a_ell + 1.0) >= 0.0
                                        ? p.tree_dim() - (a_ell + 1.0)
                                        : 0.0));
  }
  auto set = pointwise_exponents(prs);
  auto rep = exponent_relation_checks(set, p, 0.3);
  CHECK(rep.total == set.estimates.size());
  CHECK(rep.antecedent > 0);
  CHECK(rep.frac_implication_ok == 1.0);
  CHECK(rep.median_sum_residual < 1e-6);
}

TEST_CASE("spectrum: degenerate input and reference lines") {
  ModelParams p(1.5);
  std::vector<BallProfile> prs;
  for (int i = 0; i < 1200; ++i)
    prs.push_back(synthetic_profile(6, 1.0 / 64, 2.0, 3.0, 0.5));
  auto set = pointwise_exponents(prs);
  auto sp = spectrum(set, 1.0 / 64, SpectrumReference::local_time, p);
  REQUIRE(sp.h_centers.size() == 1);
  CHECK(sp.counts[0] == 1200);
  CHECK(sp.f_anchored[0] == doctest::Approx(p.inv_gm1()));  // anchored full dim

  for (std::size_t i = 0; i < sp.h_centers.size(); ++i)
    CHECK(sp.reference[i] ==
          doctest::Approx(p.gamma * sp.h_centers[i] - 1.0).epsilon(1e-12));

  // spectrum endpoint values of the theoretical lines
  CHECK(p.gamma * (1.0 / p.gamma) - 1.0 == doctest::Approx(0.0));
  CHECK(p.gamma * p.inv_gm1() - 1.0 == doctest::Approx(2.0));
  CHECK(p.gamma * ((1.0 + p.gamma) / p.gamma - 1.0) - 1.0 ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.gamma * (p.tree_dim() - 1.0) - 1.0 == doctest::Approx(2.0));

  CHECK_THROWS_AS(
      spectrum(ExponentSet{}, 0.01, SpectrumReference::local_time, p),
      std::domain_error);
}

TEST_CASE("level-set specs: nominal dimensions and covering counts") {
  LevelSetSpec singleton{LevelSetKind::singleton, 1.0, 1.0};
  LevelSetSpec interval{LevelSetKind::interval, 0.5, 1.0};
  LevelSetSpec cantor{LevelSetKind::cantor, 0.5, 1.0};
  CHECK(singleton.nominal_dim() == 0.0);
  CHECK(interval.nominal_dim() == 1.0);
  CHECK(cantor.nominal_dim() ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));

  const double a0 = 0.25, delta = 1.0 / 512;
  CHECK(singleton.covering_cells(a0, delta, 8, 512).size() == 1);
  auto iv = interval.covering_cells(a0, delta, 8, 512);
  CHECK(iv.size() == doctest::Approx(0.5 / (8 * delta)).epsilon(0.05));

  // Cantor covering counts scale with dimension log2/log3
  std::vector<double> lx, ly;
  for (uint32_t span : {2u, 4u, 8u, 16u, 32u}) {
    auto cells = cantor.covering_cells(a0, delta, span, 512);
    lx.push_back(-std::log(span * delta));
    ly.push_back(std::log(static_cast<double>(cells.size())));
  }
  auto fit = ols_fit(lx, ly);
  CHECK(fit.slope == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(0.12));
}

TEST_CASE("slice-tree exponents: medians near the typical values (smoke)") {
  ModelParams p(1.8);
  auto table = LocalTimeLawTable::build(p, 512);
  RandomStream rng(55);
  std::vector<BallProfile> profiles;
  const double delta = 1.0 / 128;
  const uint16_t k_a = 64;  // a = 1.0 with a0 = 0.5
  for (int rep = 0; rep < 60 && profiles.size() < 600; ++rep) {
    auto t = SliceTree::grow(p, delta, 0.5, 1.0 + 16 * delta, table, rng);
    if (t.levels() < k_a + 16 || t.level_size(k_a) == 0) continue;
    auto set = ball_profiles(t, k_a, 40, VertexSampling::size_biased, rng, 4);
    for (auto& pr : set.profiles) profiles.push_back(std::move(pr));
  }
  REQUIRE(profiles.size() >= 400);
  auto set = pointwise_exponents(profiles);
  std::vector<double> aell, am;
  for (const auto& e : set.estimates) {
    aell.push_back(e.alpha_ell);
    am.push_back(e.alpha_m);
  }
  // coarse pilot at delta = 2^-7: generous tolerances, tightened in the
  // acceptance run at delta = 2^-10
  CHECK(median(aell) == doctest::Approx(p.inv_gm1()).epsilon(0.4));
  CHECK(median(am) == doctest::Approx(p.tree_dim()).epsilon(0.35));
}

TEST_CASE("box dimensions: level set below Cantor set below tree (smoke)") {
  ModelParams p(1.5);
  auto table = LocalTimeLawTable::build(p, 512);
  RandomStream rng(66);
  BoxCount level_c, tree_c, cantor_c;
  LevelSetSpec cantor{LevelSetKind::cantor, 0.5, 1.25};
  const double delta = 1.0 / 128;
  const uint16_t k_a = 96;  // a = 1.0 from a0 = 0.25
  for (int rep = 0; rep < 150; ++rep) {
    auto t = SliceTree::grow(p, delta, 0.25, 1.5, table, rng);
    if (t.levels() < 32) continue;
    accumulate_box_counts_level(t, std::min<uint16_t>(k_a, t.levels()), 2, 5,
                                level_c);
    accumulate_box_counts_tree(t, 2, 5, tree_c);
    accumulate_box_counts_levelset(t, cantor, 2, 5, cantor_c);
  }
  auto d_level = box_dimension(level_c);
  auto d_tree = box_dimension(tree_c);
  auto d_cantor = box_dimension(cantor_c);
  // gamma=1.5: dim T(a) = 2, dim T(F) = 2.63, dim T = 3
  CHECK(d_level.slope == doctest::Approx(2.0).epsilon(0.25));
  CHECK(d_tree.slope == doctest::Approx(3.0).epsilon(0.2));
  CHECK(d_cantor.slope > d_level.slope);
  CHECK(d_tree.slope > d_cantor.slope);
}

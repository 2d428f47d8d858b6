#include "stlab/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stlab/stats.hpp"

namespace stlab {

namespace {

// window slopes of y against x; returns (min, max, full-range fit)
struct WindowSlopes {
  double min_slope = 0.0;
  double max_slope = 0.0;
  double r2 = 0.0;
};

WindowSlopes window_slopes(const std::vector<double>& x,
                           const std::vector<double>& y, int window) {
  const int n = static_cast<int>(x.size());
  WindowSlopes w;
  w.min_slope = 1e300;
  w.max_slope = -1e300;
  for (int j = 0; j + window <= n; ++j) {
    auto f = ols_fit(std::span<const double>(x.data() + j, window),
                     std::span<const double>(y.data() + j, window));
    w.min_slope = std::min(w.min_slope, f.slope);
    w.max_slope = std::max(w.max_slope, f.slope);
  }
  w.r2 = ols_fit(x, y).r2;
  return w;
}

}  // namespace

ExponentSet pointwise_exponents(const std::vector<BallProfile>& profiles,
                                int window, double flag_spread) {
  ExponentSet set;
  set.estimates.reserve(profiles.size());
  for (const auto& pr : profiles) {
    const int n = static_cast<int>(pr.radii.size());
    if (n < 4 || n < window) {
      ++set.dropped;
      continue;
    }
    bool ok = true;
    for (int j = 0; j < n; ++j)
      ok &= (pr.ell[j] > 0.0 && pr.mass[j] > 0.0);
    if (!ok) {
      ++set.dropped;
      continue;
    }
    std::vector<double> lr(n), lell(n), lm(n), linv(n), lnb(n);
    for (int j = 0; j < n; ++j) {
      lr[j] = std::log(pr.radii[j]);
      lell[j] = std::log(pr.ell[j]);
      lm[j] = std::log(pr.mass[j]);
      linv[j] = -lr[j];
      lnb[j] = std::log1p(pr.nb[j]);
    }
    auto we = window_slopes(lr, lell, window);
    auto wm = window_slopes(lr, lm, window);
    (void)wm;

    // Full-range regression slopes. The trailing-window minimum (the naive
    // liminf surrogate) is an order statistic of a handful of noisy window
    // slopes and collapses far below the limit at 6-10 dyadic scales; its
    // spread survives as the oscillation diagnostic.
    ExponentEstimate e;
    e.vertex = pr.vertex;
    e.alpha_ell = ols_fit(lr, lell).slope;
    e.alpha_m = ols_fit(lr, lm).slope;
    e.alpha_b = ols_fit(linv, lnb).slope;
    e.spread_ell = we.max_slope - we.min_slope;
    e.r2_ell = we.r2;
    e.scales = n;
    e.flagged = e.spread_ell > flag_spread;
    set.estimates.push_back(e);
  }
  return set;
}

ExponentRelations exponent_relation_checks(const ExponentSet& set,
                                           const ModelParams& p,
                                           double tol) {
  ExponentRelations r;
  r.total = set.estimates.size();
  std::size_t ok = 0;
  std::vector<double> residuals;
  residuals.reserve(r.total);
  for (const auto& e : set.estimates) {
    if (e.alpha_ell <= p.inv_gm1() + tol) {
      ++r.antecedent;
      ok += (e.alpha_m <= e.alpha_ell + 1.0 + tol);
    }
    residuals.push_back(std::fabs(e.alpha_m + e.alpha_b - p.tree_dim()));
  }
  r.frac_implication_ok =
      (r.antecedent > 0) ? static_cast<double>(ok) / r.antecedent : 1.0;
  if (!residuals.empty()) r.median_sum_residual = median(residuals);
  return r;
}

SpectrumEstimate spectrum(const ExponentSet& set, double delta,
                          SpectrumReference ref, const ModelParams& p,
                          double bin_width, std::size_t min_count) {
  if (set.estimates.size() < 1000)
    throw std::domain_error("spectrum: need at least 1e3 estimates");
  SpectrumEstimate sp;
  sp.delta = delta;

  std::vector<double> hs;
  hs.reserve(set.estimates.size());
  for (const auto& e : set.estimates)
    hs.push_back(ref == SpectrumReference::local_time ? e.alpha_ell : e.alpha_m);
  double h_lo = *std::min_element(hs.begin(), hs.end());
  double h_hi = *std::max_element(hs.begin(), hs.end());
  int b_lo = static_cast<int>(std::floor(h_lo / bin_width));
  int b_hi = static_cast<int>(std::floor(h_hi / bin_width));
  std::vector<std::size_t> counts(b_hi - b_lo + 1, 0);
  for (double h : hs) {
    int b = static_cast<int>(std::floor(h / bin_width)) - b_lo;
    b = std::max(0, std::min<int>(b, counts.size() - 1));
    ++counts[static_cast<std::size_t>(b)];
  }

  const double log_inv = std::log(1.0 / delta);
  std::size_t modal = 0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > counts[modal]) modal = i;

  const double full_dim = p.inv_gm1();
  double f_modal = std::log(static_cast<double>(counts[modal])) / log_inv;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < min_count) continue;
    double h = (b_lo + static_cast<int>(i) + 0.5) * bin_width;
    double f = std::log(static_cast<double>(counts[i])) / log_inv;
    sp.h_centers.push_back(h);
    sp.counts.push_back(counts[i]);
    sp.f_raw.push_back(f);
    sp.f_anchored.push_back(f - f_modal + full_dim);
    sp.reference.push_back(ref == SpectrumReference::local_time
                               ? p.gamma * h - 1.0
                               : p.gamma * (h - 1.0) - 1.0);
  }
  if (sp.h_centers.size() >= 2) {
    auto fit = ols_fit(sp.h_centers, sp.f_anchored);
    sp.slope = fit.slope;
    sp.slope_se = fit.slope_se;
  }
  return sp;
}

SpectrumEstimate partition_spectrum(std::span<const double> masses,
                                    double delta, SpectrumReference ref,
                                    const ModelParams& p, double bin_width,
                                    std::size_t min_count, double onset_x) {
  if (masses.size() < 1000)
    throw std::domain_error("partition_spectrum: need at least 1e3 cells");
  SpectrumEstimate sp;
  sp.delta = delta;
  const double log_inv = std::log(1.0 / delta);
  std::vector<double> hs;
  hs.reserve(masses.size());
  for (double m : masses)
    if (m > 0.0) hs.push_back(std::log(m) / std::log(delta));
  double h_lo = *std::min_element(hs.begin(), hs.end());
  double h_hi = *std::max_element(hs.begin(), hs.end());
  int b_lo = static_cast<int>(std::floor(h_lo / bin_width));
  int b_hi = static_cast<int>(std::floor(h_hi / bin_width));
  std::vector<std::size_t> counts(b_hi - b_lo + 1, 0);
  for (double h : hs) {
    int b = static_cast<int>(std::floor(h / bin_width)) - b_lo;
    b = std::max(0, std::min<int>(b, counts.size() - 1));
    ++counts[static_cast<std::size_t>(b)];
  }
  std::size_t modal = 0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > counts[modal]) modal = i;
  const double full_dim = p.inv_gm1();
  const double f_modal =
      std::log(static_cast<double>(counts[modal])) / log_inv;
  const double modal_h = (b_lo + static_cast<int>(modal) + 0.5) * bin_width;
  const double onset_offset = std::log(onset_x) / log_inv;

  std::vector<double> fit_x, fit_y;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < min_count) continue;
    double hh = (b_lo + static_cast<int>(i) + 0.5) * bin_width;
    double f = std::log(static_cast<double>(counts[i])) / log_inv;
    sp.h_centers.push_back(hh);
    sp.counts.push_back(counts[i]);
    sp.f_raw.push_back(f);
    sp.f_anchored.push_back(f - f_modal + full_dim);
    sp.reference.push_back(ref == SpectrumReference::local_time
                               ? p.gamma * hh - 1.0
                               : p.gamma * (hh - 1.0) - 1.0);
    if (hh <= modal_h - onset_offset) {
      fit_x.push_back(hh);
      fit_y.push_back(f);
    }
  }
  if (fit_x.size() >= 3) {
    auto fit = ols_fit(fit_x, fit_y);
    sp.slope = fit.slope;
    sp.slope_se = fit.slope_se;
  }
  return sp;
}

double LevelSetSpec::nominal_dim() const {
  switch (kind) {
    case LevelSetKind::singleton:
      return 0.0;
    case LevelSetKind::interval:
      return 1.0;
    case LevelSetKind::cantor:
      return std::log(2.0) / std::log(1.0 / cantor_ratio);
  }
  return 0.0;
}

std::vector<uint32_t> LevelSetSpec::covering_cells(double a0, double delta,
                                                   uint32_t span_slices,
                                                   uint32_t max_level) const {
  const double cell = span_slices * delta;
  auto to_cell = [&](double a) {
    double idx = std::floor((a - a0) / cell);
    return static_cast<int64_t>(idx);
  };
  auto emit_range = [&](double lo_a, double hi_a, std::vector<int64_t>& cells) {
    int64_t c0 = to_cell(lo_a);
    int64_t c1 = to_cell(hi_a - 1e-12 * cell);
    for (int64_t c = c0; c <= c1; ++c) cells.push_back(c);
  };

  std::vector<int64_t> cells;
  if (kind == LevelSetKind::singleton) {
    cells.push_back(to_cell(lo));
  } else if (kind == LevelSetKind::interval) {
    emit_range(lo, hi, cells);
  } else {
    // refine the Cantor construction until pieces are below one cell
    std::vector<std::pair<double, double>> segs{{lo, hi}};
    while ((segs.front().second - segs.front().first) > cell &&
           segs.size() < (1u << 20)) {
      std::vector<std::pair<double, double>> next;
      next.reserve(2 * segs.size());
      for (auto [s0, s1] : segs) {
        double len = (s1 - s0) * cantor_ratio;
        next.push_back({s0, s0 + len});
        next.push_back({s1 - len, s1});
      }
      segs.swap(next);
    }
    for (auto [s0, s1] : segs) emit_range(s0, s1, cells);
  }

  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  std::vector<uint32_t> out;
  for (int64_t c : cells) {
    int64_t level = c * span_slices;  // left endpoint in slice units
    if (level < 0) continue;
    if (level + span_slices > max_level) continue;
    out.push_back(static_cast<uint32_t>(level));
  }
  return out;
}

namespace {

void ensure_scales(BoxCount& out, int j_lo, int j_hi, double delta) {
  if (!out.log_inv_scale.empty()) return;
  for (int j = j_lo; j <= j_hi; ++j) {
    out.log_inv_scale.push_back(-std::log(delta * (1u << j)));
    out.counts.push_back(0.0);
  }
}

}  // namespace

void accumulate_box_counts_level(const SliceTree& t, uint16_t level, int j_lo,
                                 int j_hi, BoxCount& out) {
  ensure_scales(out, j_lo, j_hi, t.delta());
  for (int j = j_lo; j <= j_hi; ++j) {
    const auto span = static_cast<uint16_t>(1u << j);
    if (level < span) continue;
    out.counts[j - j_lo] +=
        t.subtree_count(static_cast<uint16_t>(level - span), span);
  }
}

void accumulate_box_counts_tree(const SliceTree& t, int j_lo, int j_hi,
                                BoxCount& out) {
  ensure_scales(out, j_lo, j_hi, t.delta());
  for (int j = j_lo; j <= j_hi; ++j) {
    const auto span = static_cast<uint16_t>(1u << j);
    double acc = t.base_level() / (t.delta() * span);  // unexplored trunk
    for (uint32_t base = 0; base + span <= t.levels(); base += span)
      acc += t.subtree_count(static_cast<uint16_t>(base), span);
    out.counts[j - j_lo] += acc;
  }
}

void accumulate_box_counts_levelset(const SliceTree& t, const LevelSetSpec& f,
                                    int j_lo, int j_hi, BoxCount& out) {
  ensure_scales(out, j_lo, j_hi, t.delta());
  for (int j = j_lo; j <= j_hi; ++j) {
    const auto span = static_cast<uint16_t>(1u << j);
    auto cells = f.covering_cells(t.base_level(), t.delta(), span, t.levels());
    double acc = 0.0;
    for (uint32_t left : cells) {
      if (left < span) continue;
      acc += t.subtree_count(static_cast<uint16_t>(left - span), span);
    }
    out.counts[j - j_lo] += acc;
  }
}

BoxDimension box_dimension(const BoxCount& counts) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < counts.counts.size(); ++i) {
    if (counts.counts[i] <= 0.0) continue;
    lx.push_back(counts.log_inv_scale[i]);
    ly.push_back(std::log(counts.counts[i]));
  }
  if (lx.size() < 4)
    throw std::domain_error("box_dimension: need at least 4 usable scales");
  auto fit = ols_fit(lx, ly);
  BoxDimension d;
  d.slope = fit.slope;
  d.slope_se = fit.slope_se;
  d.scales = static_cast<int>(lx.size());
  return d;
}

ExtremeExponents extreme_exponents(const ExponentSet& set) {
  ExtremeExponents x;
  x.vertices = set.estimates.size();
  if (set.estimates.empty()) return x;
  x.min_alpha_ell = 1e300;
  x.min_alpha_m = 1e300;
  for (const auto& e : set.estimates) {
    x.min_alpha_ell = std::min(x.min_alpha_ell, e.alpha_ell);
    x.min_alpha_m = std::min(x.min_alpha_m, e.alpha_m);
  }
  return x;
}

}  // namespace stlab

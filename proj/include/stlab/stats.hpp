#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stlab/special.hpp"

// Statistical verification toolbox: Kolmogorov-Smirnov tests (one- and
// two-sample), chi-square goodness of fit against a Poisson law, log-log
// regression, and the heavy-tail-aware mean estimator used wherever raw
// sample means have infinite variance.

namespace stlab {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline MeanSE mean_se(std::span<const double> xs) {
  MeanSE r;
  r.n = xs.size();
  if (r.n == 0) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(r.n);
  double q = 0.0;
  for (double x : xs) q += (x - r.mean) * (x - r.mean);
  if (r.n > 1) r.se = std::sqrt(q / (static_cast<double>(r.n) * (r.n - 1.0)));
  return r;
}

// Standard error of a binomial frequency estimate.
inline double freq_se(double freq, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(freq * (1.0 - freq), 1.0 / n) / n);
}

// Kolmogorov survival function Q_KS(t) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2).
inline double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = 2.0 * std::exp(-2.0 * j * j * t * t);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-14) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample KS against a cdf; Stephens' small-sample correction.
inline KsResult ks_test(std::vector<double> xs,
                        const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::fabs((i + 1.0) / n - f));
    d = std::max(d, std::fabs(f - i / n));
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

// Two-sample KS.
inline KsResult ks_test2(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("ks_test2: empty");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    double x = xs[i], y = ys[j];
    if (x <= y) ++i;
    if (y <= x) ++j;
    d = std::max(d, std::fabs(i / nx - j / ny));
  }
  const double ne = std::sqrt(nx * ny / (nx + ny));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

struct Chi2Result {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

// Chi-square GOF of integer counts against a Poisson(lambda) law; bins with
// expected count below min_expected are merged into their neighbours.
inline Chi2Result chi2_poisson_gof(std::span<const uint64_t> counts,
                                   double lambda,
                                   double min_expected = 5.0) {
  if (counts.empty()) throw std::invalid_argument("chi2: empty sample");
  const double n = static_cast<double>(counts.size());
  uint64_t kmax = 0;
  for (auto c : counts) kmax = std::max(kmax, c);
  std::vector<double> observed(kmax + 1, 0.0), expected(kmax + 1, 0.0);
  for (auto c : counts) observed[c] += 1.0;
  double p = std::exp(-lambda);
  double cum = 0.0;
  for (uint64_t k = 0; k <= kmax; ++k) {
    expected[k] = n * p;
    cum += p;
    p *= lambda / static_cast<double>(k + 1);
  }
  // everything above kmax goes into the last cell
  expected[kmax] += n * (1.0 - cum);

  // merge small-expectation cells left to right
  std::vector<double> obs_m, exp_m;
  double o_acc = 0.0, e_acc = 0.0;
  for (uint64_t k = 0; k <= kmax; ++k) {
    o_acc += observed[k];
    e_acc += expected[k];
    if (e_acc >= min_expected) {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 && !exp_m.empty()) {
    obs_m.back() += o_acc;
    exp_m.back() += e_acc;
  }
  if (exp_m.size() < 2) throw std::runtime_error("chi2: degenerate binning");

  Chi2Result r;
  for (std::size_t k = 0; k < exp_m.size(); ++k) {
    double d = obs_m[k] - exp_m[k];
    r.statistic += d * d / exp_m[k];
  }
  r.dof = static_cast<int>(exp_m.size()) - 1;
  r.p_value = gamma_q(0.5 * r.dof, 0.5 * r.statistic);
  return r;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};

inline LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("ols_fit: bad input");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate x");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  if (n > 2) f.slope_se = std::sqrt(ss_res / ((n - 2.0) * sxx));
  return f;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty");
  std::size_t m = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + m, xs.end());
  double hi = xs[m];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + m - 1, xs.begin() + m);
  return 0.5 * (hi + xs[m - 1]);
}

inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty");
  q = std::min(1.0, std::max(0.0, q));
  std::size_t k = static_cast<std::size_t>(q * (xs.size() - 1));
  std::nth_element(xs.begin(), xs.begin() + k, xs.end());
  return xs[k];
}

// Mean of a heavy-tailed sample: trimmed sample mean below the threshold
// plus the analytic tail expectation E[X 1{X>T}] supplied by the caller
// (computed from the known law). The SE covers the trimmed part only; the
// tail term is analytic.
struct TailCorrectedMean {
  double mean = 0.0;
  double se = 0.0;
  double threshold = 0.0;
  double tail_term = 0.0;
};

inline TailCorrectedMean tail_corrected_mean(std::span<const double> xs,
                                             double threshold,
                                             double analytic_tail_expectation) {
  TailCorrectedMean r;
  r.threshold = threshold;
  r.tail_term = analytic_tail_expectation;
  const std::size_t n = xs.size();
  if (n == 0) return r;
  double s = 0.0;
  for (double x : xs) s += (x <= threshold) ? x : 0.0;
  double trimmed = s / static_cast<double>(n);
  double q = 0.0;
  for (double x : xs) {
    double t = ((x <= threshold) ? x : 0.0) - trimmed;
    q += t * t;
  }
  r.mean = trimmed + analytic_tail_expectation;
  if (n > 1) r.se = std::sqrt(q / (static_cast<double>(n) * (n - 1.0)));
  return r;
}

}  // namespace stlab

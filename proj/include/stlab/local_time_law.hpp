#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stlab/analytic.hpp"
#include "stlab/model.hpp"
#include "stlab/rng.hpp"

// The law of the total local time <l^1> under N_1, tabulated by numerical
// Laplace inversion of its transform
//   E[e^{-mu X}] = 1 - mu (mu^{gamma-1} + 1/(gamma-1))^{-1/(gamma-1)},
// equivalently the complementary CDF has transform
//   int_0^inf e^{-mu x} P(X > x) dx = (mu^{gamma-1} + 1/(gamma-1))^{-1/(gamma-1)}.
// Outside the tabulated window the exact power-law tail asymptotics take
// over (the
// gamma = 2 law is Exponential(1) with an exponential right tail).
// Scaling to level a is exact: <l^a> under N_a equals a^{1/(gamma-1)} X.

namespace stlab {

class LocalTimeLawTable {
 public:
  struct BuildDiagnostics {
    double max_residual = 0.0;      // worst Talbot self-consistency defect
    double worst_node_x = 0.0;
    double junction_x = 0.0;        // where the stitched right tail takes over
    double junction_u = 0.0;
    double junction_slope = 0.0;    // log-slope of the stitched tail
    double junction_coef_rel_err = 0.0;  // vs the closed-form tail coefficient
  };

  static LocalTimeLawTable build(const ModelParams& p,
                                 std::size_t resolution = 1024);

  // quantile function of X = <l^1> under N_1
  double quantile(double u) const;
  // CDF / complementary CDF of X
  double cdf(double x) const;
  double sf(double x) const { return 1.0 - cdf(x); }

  // one sample of <l^a> under N_a, via inverse CDF and exact scaling
  double sample(double a, RandomStream& rng) const;
  double sample_unit(RandomStream& rng) const { return quantile(rng.u01()); }
  double level_scale(double a) const;

  // E[X] = (gamma-1)^{1/(gamma-1)}
  double mean() const;
  // E[X 1{X > threshold}] from the tabulated law plus the stitched tail
  double tail_expectation(double threshold) const;

  double gamma() const { return gamma_; }
  std::size_t resolution() const { return xs_.size(); }
  const BuildDiagnostics& diagnostics() const { return diag_; }
  double left_tail_coef() const { return left_coef_; }
  double right_tail_coef() const { return right_coef_; }

  // CSV cache, keyed by (gamma, resolution); returns false if absent/invalid
  void save(const std::string& path) const;
  static bool try_load(const std::string& path, const ModelParams& p,
                       std::size_t resolution, LocalTimeLawTable& out);
  static std::string cache_filename(const ModelParams& p,
                                    std::size_t resolution);

  // Reference evaluations of P(X > x), exported for tests and diagnostics.
  static double survival_by_talbot(double x, const ModelParams& p, int M = 28);
  static double survival_by_series(double x, const ModelParams& p);
  static double survival_by_asymptotic(double x, const ModelParams& p,
                                       int terms = 6);

 private:
  double gamma_ = 0.0;
  std::vector<double> xs_;     // increasing
  std::vector<double> lxs_;    // log xs_
  std::vector<double> us_;     // CDF at xs_, increasing
  std::vector<double> res_;    // per-node inversion residuals
  std::vector<double> dydu_;   // PCHIP slopes for quantile (y = log x vs u)
  std::vector<double> dudy_;   // PCHIP slopes for cdf (u vs y = log x)
  std::size_t junction_ = 0;   // index where the right tail takes over
  double left_coef_ = 0.0;     // closed-form left-tail coefficient
  double right_coef_ = 0.0;    // closed-form right-tail coefficient (gamma<2)
  BuildDiagnostics diag_;

  void finalize();  // PCHIP slopes + diagnostics
};

}  // namespace stlab

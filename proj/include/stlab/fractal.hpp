#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stlab/model.hpp"
#include "stlab/slicetree.hpp"

// Exponent estimation and coarse-grained fractal statistics. Pointwise
// scaling exponents are liminf/limsup limits, so the finite-scale surrogates
// use trailing windows of log-log slopes: the minimum window slope for the
// liminf exponents (local time / mass), the maximum for the limsup branching
// exponent. The coarse spectrum is the normalized log occupancy of exponent
// bins, anchored so the modal bin carries the full level-set dimension.

namespace stlab {

struct ExponentEstimate {
  uint32_t vertex = 0;
  double alpha_ell = 0.0;
  double alpha_m = 0.0;
  double alpha_b = 0.0;
  double spread_ell = 0.0;  // max - min window slope; oscillation flag
  double r2_ell = 0.0;      // full-range regression fit
  int scales = 0;
  bool flagged = false;  // spread above the oscillation threshold
};

struct ExponentSet {
  std::vector<ExponentEstimate> estimates;
  std::size_t dropped = 0;  // profiles with a non-positive mass at some scale
};

ExponentSet pointwise_exponents(const std::vector<BallProfile>& profiles,
                                int window = 3, double flag_spread = 0.5);

struct ExponentRelations {
  std::size_t total = 0;
  std::size_t antecedent = 0;     // alpha_ell <= 1/(g-1) + tol
  double frac_implication_ok = 1.0;  // of those: alpha_m <= alpha_ell + 1 + tol
  double median_sum_residual = 0.0;  // median |alpha_m + alpha_b - g/(g-1)|
};

ExponentRelations exponent_relation_checks(const ExponentSet& set,
                                           const ModelParams& p,
                                           double tol = 0.3);

enum class SpectrumReference { local_time, mass };

struct SpectrumEstimate {
  double delta = 0.0;
  std::vector<double> h_centers;
  std::vector<std::size_t> counts;
  std::vector<double> f_raw;       // log N(h) / log(1/delta)
  std::vector<double> f_anchored;  // modal bin pinned to 1/(gamma-1)
  std::vector<double> reference;   // gamma h - 1  or  gamma (h-1) - 1
  double slope = 0.0;              // OLS of f over the populated bins
  double slope_se = 0.0;
};

SpectrumEstimate spectrum(const ExponentSet& set, double delta,
                          SpectrumReference ref, const ModelParams& p,
                          double bin_width = 0.1, std::size_t min_count = 10);

// Partition-function coarse spectrum: bins the single-scale cell exponents
// h_i = log(mass_i)/log(delta) of a level partition. The reported slope is
// fitted on the rising flank only (h below the modal bin), staying clear of
// the region where the law's power tail has not yet set in: bins within
// log(onset_x)/log(1/delta) of the mode are excluded.
SpectrumEstimate partition_spectrum(std::span<const double> masses,
                                    double delta, SpectrumReference ref,
                                    const ModelParams& p,
                                    double bin_width = 0.1,
                                    std::size_t min_count = 10,
                                    double onset_x = 30.0);

// ---- level-set specifications and box dimensions ------------------------

enum class LevelSetKind { singleton, interval, cantor };

struct LevelSetSpec {
  LevelSetKind kind = LevelSetKind::singleton;
  double lo = 0.0;  // singleton point, or interval / Cantor support [lo, hi]
  double hi = 0.0;
  double cantor_ratio = 1.0 / 3.0;  // middle-(1-2r) construction

  double nominal_dim() const;
  // left endpoints (level indices) of the scale-delta' cells meeting F
  std::vector<uint32_t> covering_cells(double a0, double delta,
                                       uint32_t span_slices,
                                       uint32_t max_level) const;
};

struct BoxCount {
  std::vector<double> log_inv_scale;
  std::vector<double> counts;  // summed over replicates
};

// Covering counts at dyadic scales span = 2^j slices, j in [j_lo, j_hi]:
// the count of a level cell at scale delta' is the number of subtrees rooted
// delta' below it that reach it. Counts accumulate across trees.
void accumulate_box_counts_level(const SliceTree& t, uint16_t level, int j_lo,
                                 int j_hi, BoxCount& out);
void accumulate_box_counts_tree(const SliceTree& t, int j_lo, int j_hi,
                                BoxCount& out);
void accumulate_box_counts_levelset(const SliceTree& t, const LevelSetSpec& f,
                                    int j_lo, int j_hi, BoxCount& out);

struct BoxDimension {
  double slope = 0.0;
  double slope_se = 0.0;
  int scales = 0;
};

BoxDimension box_dimension(const BoxCount& counts);

struct ExtremeExponents {
  double min_alpha_ell = 0.0;
  double min_alpha_m = 0.0;
  std::size_t vertices = 0;
};

ExtremeExponents extreme_exponents(const ExponentSet& set);

}  // namespace stlab

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stlab/local_time_law.hpp"
#include "stlab/model.hpp"
#include "stlab/offspring.hpp"
#include "stlab/rng.hpp"

// Second, independent generator: critical Galton-Watson trees with the
// stable offspring law, explored three ways.
//  * Plane trees conditioned on total progeny (rejection on the Lukasiewicz
//    walk) feed the metric machinery: contour height path, the quotient
//    metric tree, occupation/upcrossing measures, graph queries, re-rooting.
//  * A breadth-first level-population engine generates high-volume samples
//    of the level mass Y_m (the discrete local time) and survival curves.
//  * Calibration ties graph units to continuum units: c_h from the stable
//    normalization of the Lukasiewicz walk, c_ell by matching the mean of
//    the conditioned level mass to 1/v(a).

namespace stlab {

inline constexpr uint32_t gw_no_parent = 0xffffffffu;

struct PlaneTree {
  std::vector<uint32_t> parent;       // preorder
  std::vector<uint32_t> child_begin;  // CSR, size n+1
  std::vector<uint32_t> child_list;   // size n-1
  uint32_t size() const { return static_cast<uint32_t>(parent.size()); }
};

struct WindowStats {
  uint64_t tries = 0;
  double acceptance_rate = 0.0;
};

// Critical GW tree conditioned by rejection to total progeny in
// [n_lo, n_hi]; throws (reporting the acceptance rate) when max_tries is
// exhausted.
PlaneTree sample_gw_window(const OffspringLaw& law, uint32_t n_lo,
                           uint32_t n_hi, uint64_t max_tries,
                           RandomStream& rng, WindowStats* stats = nullptr);

struct HeightPath {
  double step = 1.0;               // time units per grid step
  std::vector<double> values;      // H_0 .. H_L, H_0 = H_L = 0
  double lifetime() const { return step * (values.size() - 1); }
};

// Contour walk of the plane tree, heights scaled by c_h; a chain of three
// vertices yields [0, 1, 2, 1, 0] * c_h.
HeightPath height_path(const PlaneTree& tree, double c_h);

struct MetricTree {
  std::vector<uint32_t> parent;       // root has gw_no_parent
  std::vector<double> edge;           // length to parent
  std::vector<double> height;         // distance to root
  std::vector<uint32_t> child_begin;  // CSR
  std::vector<uint32_t> child_list;
  std::vector<uint32_t> time_vertex;  // grid point -> vertex id
  std::vector<uint32_t> rep_time;     // vertex id -> one representative time
  uint32_t root = 0;

  uint32_t size() const { return static_cast<uint32_t>(parent.size()); }
  bool is_leaf(uint32_t v) const { return child_begin[v + 1] == child_begin[v]; }
  uint32_t degree(uint32_t v) const {
    return child_begin[v + 1] - child_begin[v] + (parent[v] != gw_no_parent);
  }
  double tree_height() const;
};

// Quotient tree of the (optionally coarsened) height sequence under the
// d_H pseudo-distance; grid-time images preserve d_H exactly on the
// coarsened grid.
MetricTree tree_from_height(const HeightPath& hp, std::size_t coarsen = 1);

// d(u, v) on the metric tree (heights plus most recent common ancestor).
double tree_distance(const MetricTree& t, uint32_t u, uint32_t v);
uint32_t tree_mrca(const MetricTree& t, uint32_t u, uint32_t v);

// multiplicity n(sigma): number of components of T minus the vertex
inline uint32_t multiplicity(const MetricTree& t, uint32_t v) {
  return t.degree(v);
}

// Literal branching count: remove the closed ball B(v, delta) and count the
// components of diameter > delta.
uint32_t nb_literal(const MetricTree& t, uint32_t v, double delta);

std::vector<uint32_t> level_set(const MetricTree& t, double a, double tol);
std::vector<uint32_t> subtree_of(const MetricTree& t, uint32_t v);

// Same metric space, root moved to v; heights become distances from v.
MetricTree reroot(const MetricTree& t, uint32_t v);

// Occupation / upcrossing measures of the exploration.
struct TreeMeasures {
  std::vector<double> vertex_weight;     // occupation, normalized to total 1
  std::vector<double> level_local_time;  // c_ell * (# depth-l vertices), per level
  double mass_scale = 0.0;               // occupation-count -> mass units
};
TreeMeasures measures(const MetricTree& t, const HeightPath& hp, double c_ell,
                      double c_h);

// Sparse-table range-minimum over a height path: d_H queries in O(1).
class PathRmq {
 public:
  explicit PathRmq(const std::vector<double>& values);
  double range_min(std::size_t lo, std::size_t hi) const;  // inclusive
  double d_h(std::size_t s, std::size_t t) const;          // quotient distance
 private:
  const std::vector<double>* v_ = nullptr;
  std::vector<std::vector<double>> table_;
};

// Ball masses around the vertex visited at grid time t_sigma: occupation
// mass and level-a upcrossing mass within each radius.
struct GwBallProfile {
  std::size_t time = 0;
  double level = 0.0;
  std::vector<double> radii;
  std::vector<double> ell;
  std::vector<double> mass;
};
GwBallProfile gw_ball_profile(const HeightPath& hp, const PathRmq& rmq,
                              std::size_t t_sigma, std::span<const double> radii,
                              double c_ell, double mass_scale);

// ---- breadth-first level-population engine -----------------------------

struct LevelEnsemble {
  std::vector<uint64_t> survived;     // [m] = # trees with height >= m
  std::vector<uint64_t> target_mass;  // Y_{m_target} over surviving trees
  uint64_t trees = 0;
  uint32_t m_target = 0;
  double survival_rate(uint32_t m) const {
    return static_cast<double>(survived[m]) / static_cast<double>(trees);
  }
};

LevelEnsemble gw_level_ensemble(const OffspringLaw& law, uint64_t trees,
                                uint32_t m_target, uint32_t m_max,
                                uint64_t seed);

// ---- calibration --------------------------------------------------------

struct GwCalibration {
  double n_norm = 0.0;   // resolution parameter of the discrete approximation
  double b_n = 0.0;      // stable normalization of the Lukasiewicz walk
  double c_h = 0.0;      // continuum height units per graph level
  double c_ell = 0.0;    // continuum local-time units per individual
  double level_a = 0.0;  // continuum height of the ensemble's target level
};

// c_h is fixed by the offspring law's stable normalization
// (b_n = (n/gamma)^{1/gamma} for the stable pgf, sqrt(n) for the critical
// geometric); c_ell matches the tail-corrected mean of Y | Y > 0 at the
// target level to the continuum mean 1/v(a).
GwCalibration calibrate_gw(const ModelParams& p, const LocalTimeLawTable& table,
                           const LevelEnsemble& ensemble, double n_norm);

}  // namespace stlab

#pragma once

#include <cstdint>
#include <vector>

#include "stlab/local_time_law.hpp"
#include "stlab/model.hpp"
#include "stlab/rng.hpp"

// Exact-in-law finite-resolution skeleton of a stable tree under N_{a0}:
// nodes carry (level, local-time mass); the root mass follows the N_{a0} law
// of <l^{a0}>, and a node of mass x spawns Poisson(x v(delta)) children with
// i.i.d. N_delta masses — the branching property restricted to slice data.
// Per-level aggregates reproduce the delta-sampled CSBP exactly.
//
// A node at level k is the base of a subtree rooted at level k-1 (in slice
// units) that survived one more slice; its subtree's level-a masses are the
// upper brackets for local-time balls around its descendants.

namespace stlab {

struct SliceGrowPolicy {
  std::size_t max_nodes = 16'000'000;  // memory budget, in retained nodes
  uint32_t band_lo = 0;  // retain nodes only from this level upward;
                         // levels below keep aggregate masses only
};

class SliceTree {
 public:
  static constexpr uint32_t no_parent = 0xffffffffu;

  struct Node {
    double mass = 0.0;
    uint32_t parent = no_parent;  // index into the retained node array
    uint16_t level = 0;           // level index k, at height a0 + k delta
    uint16_t pad = 0;
  };

  static SliceTree grow(const ModelParams& p, double delta, double a0,
                        double horizon, const LocalTimeLawTable& table,
                        RandomStream& rng, SliceGrowPolicy policy = {});

  // hand-built trees for forced-structure tests: levels[k] lists the nodes
  // of level k as (parent index within level k-1, mass)
  static SliceTree manual(const ModelParams& p, double delta, double a0,
                          const std::vector<std::vector<std::pair<uint32_t, double>>>& levels);

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  double base_level() const { return a0_; }
  double height_of(uint16_t level) const { return a0_ + level * delta_; }
  uint16_t levels() const { return levels_; }  // last grown level index
  uint32_t band_lo() const { return band_lo_; }
  bool aborted() const { return aborted_; }
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(uint32_t i) const { return nodes_[i]; }

  // per-level aggregate <l^{a0+k delta}> (available for all levels)
  double level_mass(uint16_t level) const { return level_mass_[level]; }
  const std::vector<double>& level_masses() const { return level_mass_; }

  // retained-node range of a level; level must be >= band_lo
  std::pair<uint32_t, uint32_t> level_range(uint16_t level) const;
  uint32_t level_size(uint16_t level) const {
    auto [b, e] = level_range(level);
    return e - b;
  }

  // children of a retained node (contiguous by construction)
  std::pair<uint32_t, uint32_t> children(uint32_t idx) const;

  // highest level reached by the subtree of each retained node
  const std::vector<uint16_t>& max_descendant_level() const;

  // Z(a, delta') with a = level k, delta' = span slices: the number of
  // subtrees rooted at level k that reach level k + span. Conditionally on
  // the tree up to k this is Poisson(<l^a> v(span delta)).
  uint32_t subtree_count(uint16_t level, uint16_t span) const;

  // n_b surrogate at sigma (a retained node at some level k): the number of
  // side branches hanging off the strict ancestors within `span` slices
  // below k that reach `span` slices above their attachment point. The
  // vertical line through sigma itself never counts.
  uint32_t branching_count(uint32_t idx, uint16_t span) const;

 private:
  double gamma_ = 0.0;
  double delta_ = 0.0;
  double a0_ = 0.0;
  uint16_t levels_ = 0;
  uint32_t band_lo_ = 0;
  bool aborted_ = false;
  std::vector<Node> nodes_;            // levels band_lo..levels_, contiguous
  std::vector<uint32_t> level_begin_;  // per retained level, size +1
  std::vector<double> level_mass_;     // all levels 0..levels_
  mutable std::vector<uint16_t> maxlev_;  // lazy

  friend struct SliceTreeTestAccess;
};

enum class VertexSampling { size_biased, uniform_over_nodes };

// Ball profile of one target vertex at level k: dyadic radii r_j = 2^j delta;
// ell[j] upper-brackets l^a(B(sigma, r_j)) by the level-a mass of the
// ancestor subtree rooted r_j below a; mass[j] is delta times the sum of
// that subtree's slice masses over levels within r_j of a; nb[j] is the
// branching-count surrogate at scale r_j.
struct BallProfile {
  uint32_t vertex = 0;
  uint16_t level = 0;
  bool truncated_window = false;  // mass window clipped at the horizon
  std::vector<double> radii;
  std::vector<double> ell;
  std::vector<double> mass;
  std::vector<double> nb;
};

struct BallProfileSet {
  std::vector<BallProfile> profiles;
  bool used_all_nodes = false;  // M exceeded the node count
};

// Profiles M vertices of the given level (size-biased or uniform over
// nodes). Scales span j = 0 .. j_max with 2^{j_max} <= min(level - band_lo,
// levels - level when clipping is disallowed).
BallProfileSet ball_profiles(const SliceTree& tree, uint16_t level,
                             std::size_t m, VertexSampling sampling,
                             RandomStream& rng, int j_max = -1,
                             bool allow_clipped_mass_window = true);

}  // namespace stlab

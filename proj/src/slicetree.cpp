#include "stlab/slicetree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stlab/analytic.hpp"

namespace stlab {

SliceTree SliceTree::grow(const ModelParams& p, double delta, double a0,
                          double horizon, const LocalTimeLawTable& table,
                          RandomStream& rng, SliceGrowPolicy policy) {
  if (!(delta > 0.0) || !(delta <= a0) || !(a0 <= horizon))
    throw std::domain_error("SliceTree::grow: need 0 < delta <= a0 <= horizon");
  const double span = horizon - a0;
  const auto steps = static_cast<std::size_t>(std::llround(span / delta));
  if (std::fabs(steps * delta - span) > 1e-9 * std::max(1.0, span))
    throw std::domain_error("SliceTree::grow: delta must divide horizon - a0");
  if (steps > 60000) throw std::domain_error("SliceTree::grow: too many levels");

  SliceTree t;
  t.gamma_ = p.gamma;
  t.delta_ = delta;
  t.a0_ = a0;
  t.band_lo_ = policy.band_lo;
  const auto K = static_cast<uint16_t>(steps);
  t.level_mass_.assign(K + 1, 0.0);

  const double v_delta = extinction_intensity(delta, p);
  const double child_scale = table.level_scale(delta);
  const bool retain0 = policy.band_lo == 0;

  // previous level as (mass, retained index) pairs; index is no_parent when
  // the level is below the retention band
  std::vector<double> prev_mass, cur_mass;
  std::vector<uint32_t> prev_idx, cur_idx;

  double root_mass = table.sample(a0, rng);
  t.level_mass_[0] = root_mass;
  prev_mass.push_back(root_mass);
  if (retain0) {
    t.nodes_.push_back({root_mass, no_parent, 0, 0});
    t.level_begin_ = {0, 1};
    prev_idx.push_back(0);
  } else {
    prev_idx.push_back(no_parent);
  }

  uint16_t grown = 0;
  for (uint16_t k = 1; k <= K; ++k) {
    const bool retain = k >= policy.band_lo;
    if (retain && t.level_begin_.empty()) t.level_begin_ = {0};
    cur_mass.clear();
    cur_idx.clear();
    const std::size_t level_start = t.nodes_.size();
    bool over_budget = false;
    double agg = 0.0;
    for (std::size_t i = 0; i < prev_mass.size() && !over_budget; ++i) {
      const uint64_t n = rng.poisson(prev_mass[i] * v_delta);
      for (uint64_t c = 0; c < n; ++c) {
        const double m = child_scale * table.quantile(rng.u01());
        agg += m;
        if (cur_mass.size() >= 4 * policy.max_nodes) {
          over_budget = true;
          break;
        }
        cur_mass.push_back(m);
        if (retain) {
          if (t.nodes_.size() >= policy.max_nodes) {
            over_budget = true;
            break;
          }
          cur_idx.push_back(static_cast<uint32_t>(t.nodes_.size()));
          t.nodes_.push_back({m, prev_idx[i], k, 0});
        } else {
          cur_idx.push_back(no_parent);
        }
      }
    }
    if (over_budget) {
      // roll the partial level back; the tree is complete through k-1
      t.nodes_.resize(level_start);
      t.aborted_ = true;
      break;
    }
    t.level_mass_[k] = agg;
    if (retain) t.level_begin_.push_back(static_cast<uint32_t>(t.nodes_.size()));
    grown = k;
    if (cur_mass.empty()) break;  // extinct
    prev_mass.swap(cur_mass);
    prev_idx.swap(cur_idx);
  }
  t.levels_ = grown;
  t.level_mass_.resize(grown + 1);
  if (!t.level_begin_.empty() && policy.band_lo > grown) t.level_begin_.clear();
  return t;
}

SliceTree SliceTree::manual(
    const ModelParams& p, double delta, double a0,
    const std::vector<std::vector<std::pair<uint32_t, double>>>& levels) {
  if (levels.empty() || levels[0].size() != 1)
    throw std::domain_error("SliceTree::manual: need a single root");
  SliceTree t;
  t.gamma_ = p.gamma;
  t.delta_ = delta;
  t.a0_ = a0;
  t.levels_ = static_cast<uint16_t>(levels.size() - 1);
  t.level_begin_ = {0};
  t.level_mass_.assign(levels.size(), 0.0);
  std::vector<uint32_t> prev_base;
  for (uint16_t k = 0; k < levels.size(); ++k) {
    uint32_t base = static_cast<uint32_t>(t.nodes_.size());
    for (const auto& [parent, mass] : levels[k]) {
      uint32_t pidx = (k == 0) ? no_parent : prev_base[0] + parent;
      t.nodes_.push_back({mass, pidx, k, 0});
      t.level_mass_[k] += mass;
    }
    // children must be grouped by parent in nondecreasing order
    for (uint32_t i = base + 1; i < t.nodes_.size(); ++i)
      if (t.nodes_[i].parent != no_parent &&
          t.nodes_[i].parent < t.nodes_[i - 1].parent)
        throw std::domain_error("SliceTree::manual: children out of order");
    t.level_begin_.push_back(static_cast<uint32_t>(t.nodes_.size()));
    prev_base = {base};
  }
  return t;
}

std::pair<uint32_t, uint32_t> SliceTree::level_range(uint16_t level) const {
  if (level < band_lo_ || level > levels_ || level_begin_.empty() ||
      static_cast<std::size_t>(level - band_lo_) + 1 >= level_begin_.size())
    throw std::domain_error("SliceTree::level_range: level not retained");
  const auto r = level - band_lo_;
  return {level_begin_[r], level_begin_[r + 1]};
}

std::pair<uint32_t, uint32_t> SliceTree::children(uint32_t idx) const {
  const auto& nd = nodes_[idx];
  if (nd.level >= levels_) return {0, 0};
  if (static_cast<uint16_t>(nd.level + 1) < band_lo_)
    throw std::domain_error("SliceTree::children: level not retained");
  auto [b, e] = level_range(static_cast<uint16_t>(nd.level + 1));
  // children are contiguous and sorted by parent index
  auto lo = std::lower_bound(nodes_.begin() + b, nodes_.begin() + e, idx,
                             [](const Node& n, uint32_t p) { return n.parent < p; });
  auto hi = std::upper_bound(nodes_.begin() + b, nodes_.begin() + e, idx,
                             [](uint32_t p, const Node& n) { return p < n.parent; });
  return {static_cast<uint32_t>(lo - nodes_.begin()),
          static_cast<uint32_t>(hi - nodes_.begin())};
}

const std::vector<uint16_t>& SliceTree::max_descendant_level() const {
  if (maxlev_.size() == nodes_.size() && !nodes_.empty()) return maxlev_;
  maxlev_.assign(nodes_.size(), 0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    maxlev_[i] = std::max(maxlev_[i], nodes_[i].level);
    uint32_t parent = nodes_[i].parent;
    if (parent != no_parent) maxlev_[parent] = std::max(maxlev_[parent], maxlev_[i]);
  }
  return maxlev_;
}

uint32_t SliceTree::subtree_count(uint16_t level, uint16_t span) const {
  if (span == 0) throw std::domain_error("subtree_count: span must be >= 1");
  if (static_cast<uint32_t>(level) + span > levels_) return 0;
  const auto& ml = max_descendant_level();
  auto [b, e] = level_range(static_cast<uint16_t>(level + 1));
  uint32_t count = 0;
  for (uint32_t i = b; i < e; ++i)
    if (ml[i] >= level + span) ++count;
  return count;
}

uint32_t SliceTree::branching_count(uint32_t idx, uint16_t span) const {
  const auto& ml = max_descendant_level();
  const uint16_t k = nodes_[idx].level;
  if (k < span || static_cast<uint16_t>(k - span) < band_lo_)
    throw std::domain_error("branching_count: ancestors below the retained band");
  // side branches only: children of strict ancestors within `span` slices,
  // excluding the ancestor path itself (a bare chain scores zero)
  uint32_t count = 0;
  uint32_t on_path = idx;
  uint32_t anc = nodes_[idx].parent;
  for (uint16_t i = 1; i <= span && anc != no_parent; ++i) {
    const uint16_t anc_level = static_cast<uint16_t>(k - i);
    auto [cb, ce] = children(anc);
    const uint16_t reach = static_cast<uint16_t>(anc_level + span);
    for (uint32_t c = cb; c < ce; ++c)
      if (c != on_path && ml[c] >= reach) ++count;
    on_path = anc;
    anc = nodes_[anc].parent;
  }
  return count;
}

BallProfileSet ball_profiles(const SliceTree& tree, uint16_t level,
                             std::size_t m, VertexSampling sampling,
                             RandomStream& rng, int j_max,
                             bool allow_clipped_mass_window) {
  auto [lb, le] = tree.level_range(level);
  const uint32_t n = le - lb;
  if (n == 0) throw std::domain_error("ball_profiles: empty level");

  BallProfileSet set;
  std::vector<uint32_t> targets;
  if (m >= n) {
    set.used_all_nodes = true;
    targets.resize(n);
    for (uint32_t i = 0; i < n; ++i) targets[i] = lb + i;
  } else if (sampling == VertexSampling::size_biased) {
    std::vector<double> cum(n);
    double acc = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
      acc += tree.node(lb + i).mass;
      cum[i] = acc;
    }
    targets.reserve(m);
    for (std::size_t s = 0; s < m; ++s) {
      double u = rng.u01() * acc;
      auto it = std::lower_bound(cum.begin(), cum.end(), u);
      targets.push_back(lb + static_cast<uint32_t>(it - cum.begin()));
    }
  } else {
    // uniform over nodes, without replacement (partial Fisher-Yates)
    std::vector<uint32_t> pool(n);
    for (uint32_t i = 0; i < n; ++i) pool[i] = lb + i;
    for (std::size_t s = 0; s < m; ++s) {
      std::size_t j = s + static_cast<std::size_t>(rng.u01() * (n - s));
      if (j >= n) j = n - 1;
      std::swap(pool[s], pool[j]);
      targets.push_back(pool[s]);
    }
  }

  // dyadic scale count: ancestor for scale j sits 2^j - 1 slices up and the
  // ancestor subtree must be rooted at a retained level
  int jm = 0;
  while ((1 << (jm + 1)) - 1 <= static_cast<int>(level) -
                                    static_cast<int>(tree.band_lo()) &&
         (allow_clipped_mass_window ||
          level + (1 << (jm + 1)) <= tree.levels()))
    ++jm;
  if (j_max >= 0) jm = std::min(jm, j_max);
  const int scales = jm + 1;

  // ancestor chains at the dyadic offsets
  const std::size_t nt = targets.size();
  std::vector<uint32_t> anc(nt * scales);
  for (std::size_t s = 0; s < nt; ++s) {
    uint32_t v = targets[s];
    uint16_t up = 0;
    for (int j = 0; j < scales; ++j) {
      const uint16_t want = static_cast<uint16_t>((1 << j) - 1);
      while (up < want) {
        v = tree.node(v).parent;
        ++up;
      }
      anc[s * scales + j] = v;
    }
  }

  set.profiles.resize(nt);
  for (std::size_t s = 0; s < nt; ++s) {
    auto& pr = set.profiles[s];
    pr.vertex = targets[s];
    pr.level = level;
    pr.radii.resize(scales);
    pr.ell.assign(scales, 0.0);
    pr.mass.assign(scales, 0.0);
    pr.nb.assign(scales, 0.0);
    for (int j = 0; j < scales; ++j)
      pr.radii[j] = tree.delta() * (1 << j);
    pr.truncated_window =
        level + (1 << (scales - 1)) > tree.levels();
  }

  // one bottom-up sweep per needed top level: D holds, for every node of
  // the current level, its subtree mass at the sweep's starting level
  const uint16_t anc_level_min =
      static_cast<uint16_t>(level - ((1 << jm) - 1));
  const uint16_t top_max = static_cast<uint16_t>(
      std::min<uint32_t>(tree.levels(), level + (1 << jm)));
  std::vector<double> d_cur, d_par;
  for (uint16_t top = anc_level_min; top <= top_max; ++top) {
    auto [tb, te] = tree.level_range(top);
    d_cur.resize(te - tb);
    for (uint32_t i = tb; i < te; ++i) d_cur[i - tb] = tree.node(i).mass;
    for (uint16_t l = top;; --l) {
      // record contributions at ancestor levels
      for (int j = 0; j < scales; ++j) {
        const uint16_t ancl = static_cast<uint16_t>(level - ((1 << j) - 1));
        if (ancl != l) continue;
        const int dist = static_cast<int>(top) - static_cast<int>(level);
        auto [ab, ae] = tree.level_range(l);
        for (std::size_t s = 0; s < nt; ++s) {
          const uint32_t a = anc[s * scales + j];
          const double dv = d_cur[a - ab];
          if (top == level && std::abs(dist) <= (1 << j))
            set.profiles[s].ell[j] = dv;
          if (std::abs(dist) <= (1 << j))
            set.profiles[s].mass[j] += tree.delta() * dv;
        }
      }
      if (l == anc_level_min) break;
      auto [cb, ce] = tree.level_range(l);
      auto [pb, pe] = tree.level_range(static_cast<uint16_t>(l - 1));
      d_par.assign(pe - pb, 0.0);
      for (uint32_t i = cb; i < ce; ++i)
        d_par[tree.node(i).parent - pb] += d_cur[i - cb];
      d_cur.swap(d_par);
    }
  }

  // branching counts per dyadic scale
  for (std::size_t s = 0; s < nt; ++s) {
    for (int j = 0; j < scales; ++j) {
      const uint16_t span = static_cast<uint16_t>(1 << j);
      if (level >= span &&
          static_cast<uint32_t>(level - span) >= tree.band_lo())
        set.profiles[s].nb[j] =
            static_cast<double>(tree.branching_count(targets[s], span));
    }
  }
  return set;
}

}  // namespace stlab

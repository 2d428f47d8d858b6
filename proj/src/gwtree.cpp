#include "stlab/gwtree.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <sstream>
#include <stdexcept>

#include "stlab/analytic.hpp"
#include "stlab/parallel.hpp"
#include "stlab/stats.hpp"

namespace stlab {

namespace {

void build_children_csr(const std::vector<uint32_t>& parent,
                        std::vector<uint32_t>& child_begin,
                        std::vector<uint32_t>& child_list) {
  const uint32_t n = static_cast<uint32_t>(parent.size());
  child_begin.assign(n + 1, 0);
  for (uint32_t v = 0; v < n; ++v)
    if (parent[v] != gw_no_parent) ++child_begin[parent[v] + 1];
  for (uint32_t v = 0; v < n; ++v) child_begin[v + 1] += child_begin[v];
  child_list.assign(n > 0 ? n - 1 : 0, 0);
  std::vector<uint32_t> cursor(child_begin.begin(), child_begin.end() - 1);
  for (uint32_t v = 0; v < n; ++v)
    if (parent[v] != gw_no_parent) child_list[cursor[parent[v]]++] = v;
}

}  // namespace

PlaneTree sample_gw_window(const OffspringLaw& law, uint32_t n_lo,
                           uint32_t n_hi, uint64_t max_tries,
                           RandomStream& rng, WindowStats* stats) {
  if (n_lo < 1 || n_hi < n_lo)
    throw std::domain_error("sample_gw_window: bad window");
  std::vector<uint32_t> offspring;
  offspring.reserve(n_hi + 1);
  for (uint64_t attempt = 1; attempt <= max_tries; ++attempt) {
    offspring.clear();
    int64_t walk = 0;  // sum (xi_i - 1); tree complete when walk hits -1
    bool done = false, overflow = false;
    while (!done && !overflow) {
      uint64_t xi = law.sample(rng);
      offspring.push_back(static_cast<uint32_t>(std::min<uint64_t>(xi, n_hi + 1)));
      walk += static_cast<int64_t>(xi) - 1;
      if (walk < 0) done = true;
      if (offspring.size() > n_hi) overflow = true;
    }
    if (overflow) continue;
    const uint32_t n = static_cast<uint32_t>(offspring.size());
    if (n < n_lo || n > n_hi) continue;

    if (stats) {
      stats->tries = attempt;
      stats->acceptance_rate = 1.0 / static_cast<double>(attempt);
    }
    // preorder construction from the offspring sequence
    PlaneTree t;
    t.parent.assign(n, gw_no_parent);
    std::vector<std::pair<uint32_t, uint32_t>> stack;  // (vertex, remaining)
    stack.reserve(64);
    for (uint32_t v = 0; v < n; ++v) {
      while (!stack.empty() && stack.back().second == 0) stack.pop_back();
      if (v > 0) {
        t.parent[v] = stack.back().first;
        --stack.back().second;
      }
      stack.push_back({v, offspring[v]});
    }
    build_children_csr(t.parent, t.child_begin, t.child_list);
    return t;
  }
  std::ostringstream os;
  os << "sample_gw_window: rejection budget exhausted after " << max_tries
     << " tries (window [" << n_lo << ", " << n_hi << "])";
  throw std::runtime_error(os.str());
}

HeightPath height_path(const PlaneTree& tree, double c_h) {
  if (tree.size() == 0) throw std::domain_error("height_path: empty tree");
  HeightPath hp;
  hp.values.reserve(2 * tree.size());
  // contour walk: emit the depth on arrival and after each child's return
  std::vector<uint32_t> depth(tree.size(), 0);
  for (uint32_t v = 1; v < tree.size(); ++v)
    depth[v] = depth[tree.parent[v]] + 1;
  std::vector<std::pair<uint32_t, uint32_t>> stack;  // (vertex, next child slot)
  stack.push_back({0, tree.child_begin[0]});
  hp.values.push_back(0.0);
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    if (slot < tree.child_begin[v + 1]) {
      uint32_t c = tree.child_list[slot];
      ++slot;
      stack.push_back({c, tree.child_begin[c]});
      hp.values.push_back(c_h * depth[c]);
    } else {
      stack.pop_back();
      if (!stack.empty())
        hp.values.push_back(c_h * depth[stack.back().first]);
    }
  }
  return hp;
}

MetricTree tree_from_height(const HeightPath& hp, std::size_t coarsen) {
  if (hp.values.empty()) throw std::domain_error("tree_from_height: empty path");
  if (coarsen == 0) coarsen = 1;
  std::vector<double> h;
  std::vector<std::size_t> grid_time;
  for (std::size_t i = 0; i < hp.values.size(); i += coarsen) {
    h.push_back(hp.values[i]);
    grid_time.push_back(i);
  }
  if ((hp.values.size() - 1) % coarsen != 0) {
    h.push_back(hp.values.back());
    grid_time.push_back(hp.values.size() - 1);
  }

  MetricTree t;
  auto add_vertex = [&](uint32_t parent, double height) {
    t.parent.push_back(parent);
    t.height.push_back(height);
    t.edge.push_back(parent == gw_no_parent ? 0.0
                                            : height - t.height[parent]);
    t.rep_time.push_back(0);
    return static_cast<uint32_t>(t.parent.size() - 1);
  };

  std::vector<uint32_t> stack;  // open vertices, increasing heights
  uint32_t root = add_vertex(gw_no_parent, h[0]);
  stack.push_back(root);
  t.time_vertex.assign(h.size(), root);
  t.time_vertex[0] = root;
  for (std::size_t i = 1; i < h.size(); ++i) {
    const double hi = h[i];
    const double prev = t.height[stack.back()];
    if (hi > prev) {
      uint32_t v = add_vertex(stack.back(), hi);
      stack.push_back(v);
      t.time_vertex[i] = v;
    } else if (hi == prev) {
      t.time_vertex[i] = stack.back();
    } else {
      uint32_t popped = stack.back();
      while (t.height[stack.back()] > hi) {
        popped = stack.back();
        stack.pop_back();
        if (stack.empty()) break;
      }
      if (!stack.empty() && t.height[stack.back()] == hi) {
        t.time_vertex[i] = stack.back();
      } else {
        // split the edge from the popped vertex's parent at height hi
        uint32_t below = stack.empty() ? gw_no_parent : stack.back();
        uint32_t mid = add_vertex(below, hi);
        t.parent[popped] = mid;
        t.edge[popped] = t.height[popped] - hi;
        if (below == gw_no_parent) {
          // new lowest point becomes the root
          t.root = mid;
          t.edge[mid] = 0.0;
        }
        stack.push_back(mid);
        t.time_vertex[i] = mid;
      }
    }
  }
  // heights were recorded from path values; re-anchor on the actual root
  build_children_csr(t.parent, t.child_begin, t.child_list);
  std::vector<char> seen(t.size(), 0);
  for (std::size_t i = 0; i < t.time_vertex.size(); ++i) {
    uint32_t v = t.time_vertex[i];
    if (!seen[v]) {
      seen[v] = 1;
      t.rep_time[v] = static_cast<uint32_t>(grid_time[i]);
    }
  }
  return t;
}

double MetricTree::tree_height() const {
  double h = 0.0;
  for (double x : height) h = std::max(h, x);
  return h;
}

uint32_t tree_mrca(const MetricTree& t, uint32_t u, uint32_t v) {
  while (u != v) {
    if (t.height[u] > t.height[v])
      u = t.parent[u];
    else if (t.height[v] > t.height[u])
      v = t.parent[v];
    else {
      u = t.parent[u];
      v = t.parent[v];
    }
    if (u == gw_no_parent || v == gw_no_parent)
      throw std::logic_error("tree_mrca: disconnected vertices");
  }
  return u;
}

double tree_distance(const MetricTree& t, uint32_t u, uint32_t v) {
  uint32_t m = tree_mrca(t, u, v);
  return t.height[u] + t.height[v] - 2.0 * t.height[m];
}

uint32_t nb_literal(const MetricTree& t, uint32_t v, double delta) {
  const uint32_t n = t.size();
  // distances from v over the undirected tree
  std::vector<double> dist(n, -1.0);
  std::vector<uint32_t> order;
  order.reserve(n);
  dist[v] = 0.0;
  order.push_back(v);
  for (std::size_t qi = 0; qi < order.size(); ++qi) {
    uint32_t u = order[qi];
    auto push = [&](uint32_t w, double d) {
      if (dist[w] < 0.0) {
        dist[w] = d;
        order.push_back(w);
      }
    };
    if (t.parent[u] != gw_no_parent) push(t.parent[u], dist[u] + t.edge[u]);
    for (uint32_t s = t.child_begin[u]; s < t.child_begin[u + 1]; ++s) {
      uint32_t w = t.child_list[s];
      push(w, dist[u] + t.edge[w]);
    }
  }

  // components of the outside set; each hangs from a single cut point at
  // distance exactly delta from v
  std::vector<int32_t> comp(n, -1);
  int32_t ncomp = 0;
  std::vector<uint32_t> stack;
  std::vector<std::vector<uint32_t>> members;
  for (uint32_t s = 0; s < n; ++s) {
    if (dist[s] <= delta || comp[s] >= 0) continue;
    members.emplace_back();
    stack.push_back(s);
    comp[s] = ncomp;
    while (!stack.empty()) {
      uint32_t u = stack.back();
      stack.pop_back();
      members.back().push_back(u);
      auto visit = [&](uint32_t w) {
        if (dist[w] > delta && comp[w] < 0) {
          comp[w] = ncomp;
          stack.push_back(w);
        }
      };
      if (t.parent[u] != gw_no_parent) visit(t.parent[u]);
      for (uint32_t sl = t.child_begin[u]; sl < t.child_begin[u + 1]; ++sl)
        visit(t.child_list[sl]);
    }
    ++ncomp;
  }

  uint32_t count = 0;
  std::vector<double> far(n, 0.0);
  for (const auto& comp_members : members) {
    // eccentricity sweep inside the component, seeded at the cut stub: the
    // entry vertex is the member with the smallest distance to v, and the
    // stub reaches back to distance delta
    uint32_t entry = comp_members.front();
    for (uint32_t u : comp_members)
      if (dist[u] < dist[entry]) entry = u;
    const double stub = dist[entry] - delta;

    auto farthest = [&](uint32_t from, double seed) {
      // distances within the component only
      for (uint32_t u : comp_members) far[u] = -1.0;
      far[from] = seed;
      std::vector<uint32_t> local{from};
      uint32_t best = from;
      for (std::size_t qi = 0; qi < local.size(); ++qi) {
        uint32_t u = local[qi];
        auto visit = [&](uint32_t w, double d) {
          if (comp[w] == comp[from] && far[w] < 0.0) {
            far[w] = d;
            local.push_back(w);
            if (far[w] > far[best]) best = w;
          }
        };
        if (t.parent[u] != gw_no_parent)
          visit(t.parent[u], far[u] + t.edge[u]);
        for (uint32_t sl = t.child_begin[u]; sl < t.child_begin[u + 1]; ++sl)
          visit(t.child_list[sl], far[u] + t.edge[t.child_list[sl]]);
      }
      return std::make_pair(best, far[best]);
    };

    auto [w1, d1] = farthest(entry, stub);
    auto [w2, d2] = farthest(w1, 0.0);
    double diameter = std::max(d1, d2);
    if (diameter > delta) ++count;
  }
  return count;
}

std::vector<uint32_t> level_set(const MetricTree& t, double a, double tol) {
  std::vector<uint32_t> out;
  for (uint32_t v = 0; v < t.size(); ++v)
    if (std::fabs(t.height[v] - a) <= tol) out.push_back(v);
  return out;
}

std::vector<uint32_t> subtree_of(const MetricTree& t, uint32_t v) {
  std::vector<uint32_t> out{v};
  for (std::size_t qi = 0; qi < out.size(); ++qi) {
    uint32_t u = out[qi];
    for (uint32_t s = t.child_begin[u]; s < t.child_begin[u + 1]; ++s)
      out.push_back(t.child_list[s]);
  }
  return out;
}

MetricTree reroot(const MetricTree& t, uint32_t new_root) {
  const uint32_t n = t.size();
  MetricTree r;
  r.parent.assign(n, gw_no_parent);
  r.edge.assign(n, 0.0);
  r.height.assign(n, -1.0);
  r.time_vertex = t.time_vertex;
  r.rep_time = t.rep_time;
  r.root = new_root;
  r.height[new_root] = 0.0;
  std::vector<uint32_t> order{new_root};
  for (std::size_t qi = 0; qi < order.size(); ++qi) {
    uint32_t u = order[qi];
    auto visit = [&](uint32_t w, double elen) {
      if (r.height[w] < 0.0) {
        r.height[w] = r.height[u] + elen;
        r.parent[w] = u;
        r.edge[w] = elen;
        order.push_back(w);
      }
    };
    if (t.parent[u] != gw_no_parent) visit(t.parent[u], t.edge[u]);
    for (uint32_t s = t.child_begin[u]; s < t.child_begin[u + 1]; ++s)
      visit(t.child_list[s], t.edge[t.child_list[s]]);
  }
  build_children_csr(r.parent, r.child_begin, r.child_list);
  return r;
}

TreeMeasures measures(const MetricTree& t, const HeightPath& hp, double c_ell,
                      double c_h) {
  TreeMeasures m;
  m.vertex_weight.assign(t.size(), 0.0);
  for (uint32_t v : t.time_vertex) m.vertex_weight[v] += 1.0;
  double total = static_cast<double>(t.time_vertex.size());
  for (double& w : m.vertex_weight) w /= total;

  // upcrossing counts per graph level; level l collects the vertices at
  // height l c_h, i.e. upcrossings of (l - 1/2) c_h
  std::size_t max_level =
      static_cast<std::size_t>(std::llround(t.tree_height() / c_h));
  m.level_local_time.assign(max_level + 1, 0.0);
  for (std::size_t i = 0; i + 1 < hp.values.size(); ++i) {
    if (hp.values[i + 1] > hp.values[i]) {
      auto l = static_cast<std::size_t>(std::llround(hp.values[i + 1] / c_h));
      if (l <= max_level) m.level_local_time[l] += c_ell;
    }
  }
  // the contour traverses each edge twice, so occupation ~ 2 x vertex count
  m.mass_scale = 0.5 * c_ell * c_h;
  return m;
}

PathRmq::PathRmq(const std::vector<double>& values) : v_(&values) {
  const std::size_t n = values.size();
  std::size_t levels = 1;
  while ((std::size_t{1} << levels) <= n) ++levels;
  table_.resize(levels);
  table_[0] = values;
  for (std::size_t j = 1; j < levels; ++j) {
    const std::size_t w = std::size_t{1} << j;
    table_[j].resize(n - w + 1);
    for (std::size_t i = 0; i + w <= n; ++i)
      table_[j][i] = std::min(table_[j - 1][i], table_[j - 1][i + w / 2]);
  }
}

double PathRmq::range_min(std::size_t lo, std::size_t hi) const {
  if (lo > hi) std::swap(lo, hi);
  const std::size_t span = hi - lo + 1;
  std::size_t j = 0;
  while ((std::size_t{2} << j) <= span) ++j;
  return std::min(table_[j][lo], table_[j][hi + 1 - (std::size_t{1} << j)]);
}

double PathRmq::d_h(std::size_t s, std::size_t t) const {
  return (*v_)[s] + (*v_)[t] - 2.0 * range_min(s, t);
}

GwBallProfile gw_ball_profile(const HeightPath& hp, const PathRmq& rmq,
                              std::size_t t_sigma,
                              std::span<const double> radii, double c_ell,
                              double mass_scale) {
  GwBallProfile pr;
  pr.time = t_sigma;
  pr.level = hp.values[t_sigma];
  pr.radii.assign(radii.begin(), radii.end());
  pr.ell.assign(radii.size(), 0.0);
  pr.mass.assign(radii.size(), 0.0);
  const double a = pr.level;
  const std::size_t n = hp.values.size();
  for (std::size_t t = 0; t < n; ++t) {
    const double d = rmq.d_h(t_sigma, t);
    for (std::size_t j = 0; j < radii.size(); ++j)
      if (d <= radii[j]) pr.mass[j] += mass_scale;
    if (t + 1 < n && hp.values[t] < a && a <= hp.values[t + 1]) {
      // distance from sigma to the crossing point of level a on this edge
      const double rm = std::min(a, rmq.range_min(std::min(t_sigma, t),
                                                  std::max(t_sigma, t + 1)));
      const double dc = pr.level + a - 2.0 * rm;
      for (std::size_t j = 0; j < radii.size(); ++j)
        if (dc <= radii[j]) pr.ell[j] += c_ell;
    }
  }
  return pr;
}

LevelEnsemble gw_level_ensemble(const OffspringLaw& law, uint64_t trees,
                                uint32_t m_target, uint32_t m_max,
                                uint64_t seed) {
  if (m_max < m_target) m_max = m_target;
  struct Part {
    std::vector<uint64_t> survived;
    std::vector<std::pair<uint64_t, uint64_t>> masses;  // (tree, Y)
  };
  const unsigned workers = std::max(
      1u, trees < 64 ? 1u : hardware_threads_capped());
  std::vector<Part> parts(workers);
  for (auto& p : parts) p.survived.assign(m_max + 1, 0);

  auto run_range = [&](unsigned w) {
    Part& part = parts[w];
    for (uint64_t k = w; k < trees; k += workers) {
      RandomStream rng(derive_seed(seed, k, "gw-bfs"));
      uint64_t y = 1;
      uint32_t m = 0;
      part.survived[0] += 1;
      while (y > 0 && m < m_max) {
        uint64_t next = 0;
        for (uint64_t i = 0; i < y; ++i) next += law.sample(rng);
        y = next;
        ++m;
        if (y > 0) part.survived[m] += 1;
        if (m == m_target && y > 0) part.masses.push_back({k, y});
      }
    }
  };
  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_range, w);
    for (auto& th : pool) th.join();
  }

  LevelEnsemble e;
  e.trees = trees;
  e.m_target = m_target;
  e.survived.assign(m_max + 1, 0);
  std::vector<std::pair<uint64_t, uint64_t>> all;
  for (const auto& p : parts) {
    for (uint32_t m = 0; m <= m_max; ++m) e.survived[m] += p.survived[m];
    all.insert(all.end(), p.masses.begin(), p.masses.end());
  }
  std::sort(all.begin(), all.end());
  e.target_mass.reserve(all.size());
  for (const auto& [k, y] : all) e.target_mass.push_back(y);
  return e;
}

GwCalibration calibrate_gw(const ModelParams& p, const LocalTimeLawTable& table,
                           const LevelEnsemble& ensemble, double n_norm) {
  GwCalibration cal;
  cal.n_norm = n_norm;
  const double g = p.gamma;
  const double cxi = p.is_quadratic() ? 1.0 : 1.0 / g;  // E e^{-l(xi-1)} = 1 + cxi l^g + ..
  cal.b_n = std::pow(cxi * n_norm, 1.0 / g);
  cal.c_h = cal.b_n / n_norm;
  cal.level_a = cal.c_h * ensemble.m_target;

  if (ensemble.target_mass.empty())
    throw std::runtime_error("calibrate_gw: no surviving trees at the target level");

  const double s = table.level_scale(cal.level_a);
  const double target_mean = 1.0 / extinction_intensity(cal.level_a, p);

  // start from median matching, then iterate the tail-corrected mean match
  std::vector<double> ys(ensemble.target_mass.begin(), ensemble.target_mass.end());
  double c = s * table.quantile(0.5) / median(ys);
  for (int it = 0; it < 4; ++it) {
    const double threshold = s * table.quantile(0.999);
    double trimmed = 0.0;
    for (double y : ys) {
      double x = c * y;
      trimmed += (x <= threshold) ? y : 0.0;
    }
    trimmed /= static_cast<double>(ys.size());
    const double tail = s * table.tail_expectation(threshold / s);
    if (trimmed <= 0.0) break;
    c = (target_mean - tail) / trimmed;
  }
  cal.c_ell = c;
  return cal;
}

}  // namespace stlab

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/bipartite.hpp"
#include "treembed/decomposition.hpp"
#include "treembed/generators.hpp"
#include "treembed/graph.hpp"
#include "treembed/ratio.hpp"

namespace treembed {

// ---------------------------------------------------------------------------
// Near-tripartite partitions with a sparse pair

struct SpecialPartition {
  std::array<std::vector<Vertex>, 3> parts;
  Ratio gamma{1, 10};
};

inline long long edges_between(const Graph& g, std::span<const Vertex> a, std::span<const Vertex> b) {
  std::vector<char> in_b(static_cast<std::size_t>(g.vertex_count()), 0);
  for (Vertex v : b) in_b[v] = 1;
  long long e = 0;
  for (Vertex u : a)
    for (Vertex v : g.neighbors(u)) e += in_b[v] ? 1 : 0;
  return e;
}

namespace detail {

// edges <= gamma^10 * pairs, exactly while the tenth powers fit in 128 bits.
inline bool within_gamma_power(long long edges, Ratio gamma, long long pairs) {
  if (edges == 0) return true;
  if (pairs == 0) return false;
  constexpr long long kExactLimit = 6000;
  if (gamma.den() <= kExactLimit) {
    __int128 num = 1, den = 1;
    for (int i = 0; i < 10; ++i) {
      num *= gamma.num();
      den *= gamma.den();
    }
    // edges * den <= num * pairs; guard the products against overflow.
    const long double lhs = static_cast<long double>(edges) * static_cast<long double>(den);
    const long double rhs = static_cast<long double>(num) * static_cast<long double>(pairs);
    if (lhs < 1e37L && rhs < 1e37L) return static_cast<__int128>(edges) * den <= num * pairs;
    return lhs <= rhs;
  }
  return static_cast<long double>(edges) <= std::pow(static_cast<long double>(gamma.value()), 10) * pairs;
}

inline std::pair<long long, long long> special_size_range(long long m, Ratio gamma) {
  const Ratio third{1, 3};
  const long long lo = std::max<long long>(0, (third - gamma * Ratio{3, 1}).ceil_times(m));
  const long long hi = (third + gamma * Ratio{3, 1}).floor_times(m);
  return {lo, hi};
}

}  // namespace detail

inline Verdict is_gamma_special(const Graph& g, Ratio gamma, const SpecialPartition& part) {
  const int n = g.vertex_count();
  const long long m = n - 1;
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& x : part.parts)
    for (Vertex v : x) {
      if (v < 0 || v >= n) return Verdict::fail("partition vertex out of range", v);
      if (seen[v]++) return Verdict::fail("partition parts overlap", v);
    }
  for (Vertex v = 0; v < n; ++v)
    if (!seen[v]) return Verdict::fail("partition does not cover the graph", v);
  const auto [lo, hi] = detail::special_size_range(m, gamma);
  for (int i = 0; i < 3; ++i) {
    const auto size = static_cast<long long>(part.parts[i].size());
    if (size < lo || size > hi)
      return Verdict::fail("size window: part " + std::to_string(i + 1) + " has " + std::to_string(size) +
                           " vertices, outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const long long e = edges_between(g, part.parts[0], part.parts[1]);
  const long long pairs = static_cast<long long>(part.parts[0].size()) * static_cast<long long>(part.parts[1].size());
  if (!detail::within_gamma_power(e, gamma, pairs))
    return Verdict::fail("density: " + std::to_string(e) + " edges between the first two parts");
  return Verdict::pass();
}

namespace detail {

inline std::optional<SpecialPartition> exact_special(const Graph& g, Ratio gamma) {
  const int n = g.vertex_count();
  const auto [lo, hi] = special_size_range(n - 1, gamma);
  std::vector<std::uint32_t> adj(static_cast<std::size_t>(n), 0);
  for (Vertex v = 0; v < n; ++v)
    for (Vertex u : g.neighbors(v)) adj[v] |= 1u << u;
  const std::uint32_t all = n == 32 ? ~0u : ((1u << n) - 1);
  auto in_range = [&](std::uint32_t mask) {
    const int c = std::popcount(mask);
    return c >= lo && c <= hi;
  };
  for (std::uint32_t x1 = 0; x1 <= all; ++x1) {
    if (!in_range(x1)) continue;
    const std::uint32_t rest = all & ~x1;
    // Subsets of rest, including the empty set.
    for (std::uint32_t x2 = rest;; x2 = (x2 - 1) & rest) {
      if (in_range(x2) && in_range(rest & ~x2)) {
        long long e = 0;
        for (Vertex v = 0; v < n; ++v)
          if (x1 >> v & 1u) e += std::popcount(adj[v] & x2);
        if (within_gamma_power(e, gamma, static_cast<long long>(std::popcount(x1)) * std::popcount(x2))) {
          SpecialPartition sp;
          sp.gamma = gamma;
          for (Vertex v = 0; v < n; ++v)
            sp.parts[(x1 >> v & 1u) ? 0 : ((x2 >> v & 1u) ? 1 : 2)].push_back(v);
          return sp;
        }
      }
      if (x2 == 0) break;
    }
  }
  return std::nullopt;
}

// Starting from a vertex v: X2 among its non-neighbours, X1 the vertices with
// fewest neighbours in X2, then swaps with X3 that lower e(X1, X2).
inline std::optional<SpecialPartition> local_special(const Graph& g, Ratio gamma, int budget) {
  const int n = g.vertex_count();
  const auto [lo, hi] = special_size_range(n - 1, gamma);
  if (lo > hi || 3 * lo > n || 3 * hi < n) return std::nullopt;
  const long long target = std::clamp<long long>(n / 3, lo, hi);
  std::vector<Vertex> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return g.degree(a) < g.degree(b); });
  for (int attempt = 0; attempt < std::min(budget, n); ++attempt) {
    const Vertex v = order[attempt];
    std::vector<Vertex> non;
    for (Vertex u = 0; u < n; ++u)
      if (u != v && !g.has_edge(u, v)) non.push_back(u);
    if (static_cast<long long>(non.size()) < target) continue;
    std::vector<int> part(static_cast<std::size_t>(n), 2);
    // X2: non-neighbours of v with the fewest neighbours among the non-neighbours' complement.
    std::vector<int> into_non(static_cast<std::size_t>(n), 0);
    std::vector<char> is_non(static_cast<std::size_t>(n), 0);
    for (Vertex u : non) is_non[u] = 1;
    for (Vertex u = 0; u < n; ++u)
      for (Vertex x : g.neighbors(u)) into_non[u] += is_non[x] ? 0 : 1;
    std::stable_sort(non.begin(), non.end(), [&](Vertex a, Vertex b) { return into_non[a] < into_non[b]; });
    for (long long i = 0; i < target; ++i) part[non[i]] = 1;
    std::vector<int> into_x2(static_cast<std::size_t>(n), 0);
    for (Vertex u = 0; u < n; ++u)
      for (Vertex x : g.neighbors(u)) into_x2[u] += part[x] == 1 ? 1 : 0;
    std::vector<Vertex> cand;
    for (Vertex u = 0; u < n; ++u)
      if (part[u] != 1) cand.push_back(u);
    std::stable_sort(cand.begin(), cand.end(), [&](Vertex a, Vertex b) { return into_x2[a] < into_x2[b]; });
    for (long long i = 0; i < target && i < static_cast<long long>(cand.size()); ++i) part[cand[i]] = 0;
    SpecialPartition sp;
    sp.gamma = gamma;
    for (Vertex u = 0; u < n; ++u) sp.parts[part[u]].push_back(u);
    if (is_gamma_special(g, gamma, sp)) return sp;
  }
  return std::nullopt;
}

}  // namespace detail

// Exact over all tripartitions up to 15 vertices, a seeded heuristic above.
// Any returned partition passes is_gamma_special.
inline std::optional<SpecialPartition> find_gamma_special(const Graph& g, Ratio gamma, int budget = 64) {
  if (g.vertex_count() == 0) return std::nullopt;
  auto found = g.vertex_count() <= 15 ? detail::exact_special(g, gamma) : detail::local_special(g, gamma, budget);
  if (found && !is_gamma_special(g, gamma, *found)) return std::nullopt;
  return found;
}

// ---------------------------------------------------------------------------
// Holes: large sparse sets

struct Hole {
  std::vector<Vertex> vertices;
  long long internal_edges = 0;
  int max_internal_degree = 0;
};

struct HoleReport {
  std::vector<Hole> holes;
  std::vector<Vertex> v_bad;  // vertices with no neighbour in some returned hole
};

namespace detail {

inline Hole recount_hole(const Graph& g, std::vector<Vertex> vs) {
  Hole h;
  std::sort(vs.begin(), vs.end());
  for (Vertex v : vs) {
    const int d = g.degree_into(v, vs);
    h.internal_edges += d;
    h.max_internal_degree = std::max(h.max_internal_degree, d);
  }
  h.internal_edges /= 2;
  h.vertices = std::move(vs);
  return h;
}

}  // namespace detail

inline long long hole_size(long long m, Ratio gamma) { return (Ratio{1, 3} - gamma * Ratio{8, 1}).ceil_times(m); }

// Size exactly ceil((1/3 - 8 gamma) m), fewer than 100 eps m^2 internal edges
// and internal degrees at most sqrt(eps) m, recounted from raw adjacency.
inline bool is_valid_hole(const Graph& g, const Hole& h, Ratio gamma, Ratio eps) {
  const long long m = g.vertex_count() - 1;
  const Hole again = detail::recount_hole(g, h.vertices);
  if (static_cast<long long>(again.vertices.size()) != hole_size(m, gamma)) return false;
  if (std::adjacent_find(again.vertices.begin(), again.vertices.end()) != again.vertices.end()) return false;
  // internal_edges < 100 eps m^2
  if (!less_than(again.internal_edges, eps * Ratio{100, 1}, m * m)) return false;
  // max degree^2 <= eps m^2
  const __int128 d = again.max_internal_degree;
  return d * d * eps.den() <= static_cast<__int128>(eps.num()) * m * m;
}

// Greedy sparse-set growth from low-degree vertices, trimmed to the exact hole
// size; later holes avoid earlier ones.
inline HoleReport find_holes(const Graph& g, Ratio gamma, Ratio eps, int budget = 32) {
  HoleReport report;
  const int n = g.vertex_count();
  const long long m = n - 1;
  const long long k = hole_size(m, gamma);
  const long long grow = std::max<long long>(k, (Ratio{1, 3} - gamma * Ratio{7, 1}).ceil_times(m));
  if (k <= 0 || grow > n) return report;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<Vertex> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return g.degree(a) < g.degree(b); });
  int tried = 0;
  for (Vertex start : order) {
    if (tried >= budget) break;
    if (taken[start]) continue;
    ++tried;
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    std::vector<Vertex> set;
    auto add = [&](Vertex v) {
      in[v] = 1;
      set.push_back(v);
      for (Vertex u : g.neighbors(v)) ++indeg[u];
    };
    add(start);
    while (static_cast<long long>(set.size()) < grow) {
      Vertex best = kNoVertex;
      for (Vertex u = 0; u < n; ++u)
        if (!in[u] && !taken[u] && (best == kNoVertex || indeg[u] < indeg[best])) best = u;
      if (best == kNoVertex) break;
      add(best);
    }
    if (static_cast<long long>(set.size()) < k) continue;
    // Trim the densest vertices: first to the degree cap, then to the exact size.
    auto degree_ok = [&](int d) {
      return static_cast<__int128>(d) * d * eps.den() <= static_cast<__int128>(eps.num()) * m * m;
    };
    auto remove_densest = [&] {
      std::size_t at = 0;
      for (std::size_t i = 1; i < set.size(); ++i)
        if (indeg[set[i]] > indeg[set[at]] || (indeg[set[i]] == indeg[set[at]] && set[i] > set[at])) at = i;
      const Vertex v = set[at];
      set.erase(set.begin() + static_cast<std::ptrdiff_t>(at));
      in[v] = 0;
      for (Vertex u : g.neighbors(v)) --indeg[u];
      return v;
    };
    auto max_deg = [&] {
      int d = 0;
      for (Vertex v : set) d = std::max(d, indeg[v]);
      return d;
    };
    while (!set.empty() && !degree_ok(max_deg())) remove_densest();
    while (static_cast<long long>(set.size()) > k) remove_densest();
    if (static_cast<long long>(set.size()) != k) continue;
    Hole h = detail::recount_hole(g, set);
    if (!is_valid_hole(g, h, gamma, eps)) continue;
    for (Vertex v : h.vertices) taken[v] = 1;
    report.holes.push_back(std::move(h));
  }
  for (Vertex v = 0; v < n; ++v)
    for (const auto& h : report.holes)
      if (g.degree_into(v, h.vertices) == 0) {
        report.v_bad.push_back(v);
        break;
      }
  return report;
}

// ---------------------------------------------------------------------------
// Hosts built from three nearly complete parts plus two small attached parts

struct StructuredHost {
  Graph graph;
  std::array<std::vector<Vertex>, 5> parts;  // H1..H5
  Vertex w = kNoVertex;

  long long m() const { return graph.vertex_count() - 1; }

  static StructuredHost from_generated(GeneratedHost gh) {
    if (gh.parts.size() != 6 || gh.parts[5].size() != 1)
      throw std::invalid_argument("expected parts H1..H5 followed by the universal vertex");
    StructuredHost h;
    h.graph = std::move(gh.graph);
    for (int i = 0; i < 5; ++i) {
      h.parts[i] = std::move(gh.parts[i]);
      std::sort(h.parts[i].begin(), h.parts[i].end());
    }
    h.w = gh.parts[5][0];
    return h;
  }

  // 0..4 for H1..H5, 5 for w.
  std::vector<int> part_of() const {
    std::vector<int> out(static_cast<std::size_t>(graph.vertex_count()), -1);
    for (int i = 0; i < 5; ++i)
      for (Vertex v : parts[i]) out[v] = i;
    if (w != kNoVertex) out[w] = 5;
    return out;
  }
};

namespace detail {

// Every vertex of `from` sees at least num/den of `to`.
inline Verdict min_cross_degree(const Graph& g, std::span<const Vertex> from, std::span<const Vertex> to, long long num,
                                long long den, const std::string& what) {
  for (Vertex v : from)
    if (static_cast<long long>(g.degree_into(v, to)) * den < num * static_cast<long long>(to.size()))
      return Verdict::fail(what + ": vertex sees too little of its target part", v);
  return Verdict::pass();
}

inline Verdict check_cover(const StructuredHost& h, int nparts) {
  const int n = h.graph.vertex_count();
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < nparts; ++i)
    for (Vertex v : h.parts[i]) {
      if (v < 0 || v >= n) return Verdict::fail("part vertex out of range", v);
      if (seen[v]++) return Verdict::fail("parts overlap", v);
    }
  if (h.w < 0 || h.w >= n || seen[h.w]++) return Verdict::fail("universal vertex missing or inside a part", h.w);
  if (h.graph.degree(h.w) != n - 1) return Verdict::fail("w is not universal", h.w);
  if (nparts == 5)
    for (Vertex v = 0; v < n; ++v)
      if (!seen[v]) return Verdict::fail("parts do not cover the host", v);
  return Verdict::pass();
}

}  // namespace detail

inline Verdict check_structured_host(const StructuredHost& h) {
  if (auto c = detail::check_cover(h, 5); !c) return c;
  const long long m = h.m();
  const auto size = [&](int i) { return static_cast<long long>(h.parts[i].size()); };
  if (size(0) != size(1) || size(1) != size(2)) return Verdict::fail("H1, H2, H3 differ in size");
  if (100 * size(0) < 33 * m) return Verdict::fail("H1, H2, H3 smaller than 33m/100");
  if (2 * size(4) > size(3)) return Verdict::fail("|H5| exceeds |H4|/2");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        if (auto v = detail::min_cross_degree(h.graph, h.parts[i], h.parts[j], 99, 100,
                                              "H" + std::to_string(i + 1) + " to H" + std::to_string(j + 1));
            !v)
          return v;
  if (auto v = detail::min_cross_degree(h.graph, h.parts[3], h.parts[1], 2, 5, "H4 to H2"); !v) return v;
  if (auto v = detail::min_cross_degree(h.graph, h.parts[4], h.parts[2], 2, 5, "H5 to H3"); !v) return v;
  return Verdict::pass();
}

// ---------------------------------------------------------------------------
// Embedding trees made mostly of bad three-vertex paths

struct StructuredOptions {
  // Enforce the beta^2 m lower bounds, which small hosts cannot meet.
  bool strict_constants = false;
};

struct FirstStageResult {
  Embedding phi;
  std::vector<char> in_tprime;  // per tree vertex
  std::vector<Vertex> w0, w1, w2, w3;
  Vertex s_star = kNoVertex;
  int w0_side = 0;
  long long tprime_size = 0;
  long long bad_total = 0;
  long long bad_left_at_h2 = 0;  // unembedded bad trees whose seed lies in H2 or on w
  std::array<long long, 3> part_counts{};
  bool size_ok = false;         // |V(T')| <= m/50
  bool conclusion_i = false;    // bad_left_at_h2 >= 33m/400 and T - T' is bad trees only
  bool conclusion_ii = false;   // H2 holds at least as much of T' as H1 and H3
  bool leaf_surplus_ok = false;
  std::map<std::string, int> cases;
  std::vector<std::string> notes;
  std::string error;

  bool ok() const { return error.empty(); }
};

namespace detail {

inline constexpr int kOnW = 3;  // part code for the universal vertex

inline int other_side(int part) { return 2 - part; }  // H1 <-> H3

struct PlacementContext {
  const Graph& g;
  const RootedTree& t;
  const std::array<std::vector<Vertex>, 5>& parts;
  Vertex w;
  std::vector<char> used;
  Embedding phi;

  PlacementContext(const Graph& graph, const RootedTree& tree, const std::array<std::vector<Vertex>, 5>& ps, Vertex uni)
      : g(graph), t(tree), parts(ps), w(uni), used(static_cast<std::size_t>(graph.vertex_count()), 0),
        phi(tree.size()) {}

  // First free vertex of the part adjacent to every given image.
  Vertex pick(int part, std::initializer_list<Vertex> near) const {
    if (part == kOnW) return used[w] ? kNoVertex : w;
    for (Vertex x : parts[part]) {
      if (used[x]) continue;
      bool ok = true;
      for (Vertex y : near) ok = ok && (y == kNoVertex || g.has_edge(x, y));
      if (ok) return x;
    }
    return kNoVertex;
  }
  void put(Vertex tv, Vertex img) {
    used[img] = 1;
    phi.assign(tv, img);
  }
  long long used_in(int part) const {
    long long c = 0;
    for (Vertex x : parts[part]) c += used[x];
    return c;
  }
};

// Subset of values (each l - 1) for W'_3 that best balances the two sides.
inline std::vector<char> balanced_split(const std::vector<long long>& a) {
  const long long total = std::accumulate(a.begin(), a.end(), 0LL);
  const std::size_t k = a.size();
  std::vector<std::vector<char>> reach(k + 1, std::vector<char>(static_cast<std::size_t>(total + 1), 0));
  reach[0][0] = 1;
  for (std::size_t i = 0; i < k; ++i)
    for (long long s = 0; s <= total; ++s)
      if (reach[i][s]) {
        reach[i + 1][s] = 1;
        reach[i + 1][s + a[i]] = 1;
      }
  long long best = 0;
  for (long long s = 0; s <= total; ++s)
    if (reach[k][s] && std::llabs(2 * s - total) < std::llabs(2 * best - total)) best = s;
  std::vector<char> pick(k, 0);
  long long s = best;
  for (std::size_t i = k; i-- > 0;) {
    if (reach[i][s]) continue;
    pick[i] = 1;
    s -= a[i];
  }
  return pick;
}

}  // namespace detail

// Embeds the part T' of t outside most bad trees into H1, H2, H3 and w so that
// H2 takes the largest share and many remaining bad trees hang from H2 or w.
inline FirstStageResult embed_first_stage(const StructuredHost& h, const RootedTree& t, const TreeDecomposition& d,
                                   const StructuredOptions& opt = {}) {
  FirstStageResult res;
  const long long m = t.edge_count();
  res.phi = Embedding(t.size());
  auto fail = [&](std::string why) {
    res.error = std::move(why);
    return res;
  };
  if (auto c = detail::check_cover(h, 3); !c) return fail("hypothesis: " + c.reason);
  for (int i = 0; i < 3; ++i) {
    if (10 * static_cast<long long>(h.parts[i].size()) < 3 * m) return fail("hypothesis: |H_i| below 3m/10");
    for (int j = 0; j < 3; ++j)
      if (i != j)
        if (auto v = detail::min_cross_degree(h.graph, h.parts[i], h.parts[j], 9, 10, "cross degree"); !v)
          return fail("hypothesis: " + v.reason);
  }
  const Ratio beta_sq_m = d.beta * d.beta * Ratio{m, 1};
  if (!(beta_sq_m > Ratio{600, 1})) {
    if (opt.strict_constants) return fail("hypothesis: beta^2 m <= 600");
    res.notes.push_back("beta^2 m = " + beta_sq_m.str() + " is below 600; continuing at desk scale");
  }

  // Bad trees and per-seed attachments.
  const int n = t.size();
  std::vector<char> is_seed(static_cast<std::size_t>(n), 0);
  for (Vertex s : d.seeds) is_seed[s] = 1;
  std::vector<std::vector<int>> bad_at(static_cast<std::size_t>(n));
  std::vector<char> bad(d.F1.size(), 0);
  for (std::size_t i = 0; i < d.F1.size(); ++i)
    if (classify(t, d.F1[i].vertices, d.F1[i].root).is_bad) {
      bad[i] = 1;
      bad_at[d.F1[i].parent_seed].push_back(static_cast<int>(i));
      ++res.bad_total;
    }
  if (100 * res.bad_total < 33 * m) return fail("hypothesis: fewer than 33m/100 bad trees");
  std::vector<long long> leaves(static_cast<std::size_t>(n), 0);
  for (const auto& mt : d.L) ++leaves[mt.parent_seed];

  // Seed classes.
  long long bad_side[2] = {0, 0};
  for (Vertex s : d.seeds) bad_side[t.side(s)] += static_cast<long long>(bad_at[s].size());
  res.w0_side = bad_side[0] >= bad_side[1] ? 0 : 1;
  std::vector<Vertex> w0_leafless, with_leaves;
  for (Vertex s : d.seeds) {
    if (t.side(s) != res.w0_side) {
      res.w1.push_back(s);
    } else {
      res.w0.push_back(s);
      (leaves[s] == 0 ? w0_leafless : with_leaves).push_back(s);
    }
  }
  std::vector<long long> excess;
  for (Vertex s : with_leaves) excess.push_back(leaves[s] - 1);
  const auto in_w3 = detail::balanced_split(excess);
  std::vector<Vertex> w2p, w3p;
  for (std::size_t i = 0; i < with_leaves.size(); ++i) (in_w3[i] ? w3p : w2p).push_back(with_leaves[i]);
  auto bad_count = [&](const std::vector<Vertex>& xs) {
    long long c = 0;
    for (Vertex s : xs) c += static_cast<long long>(bad_at[s].size());
    return c;
  };
  auto leaf_count = [&](const std::vector<Vertex>& xs) {
    long long c = 0;
    for (Vertex s : xs) c += leaves[s];
    return c;
  };
  if (bad_count(w2p) < bad_count(w3p)) std::swap(w2p, w3p);
  const long long lhs = leaf_count(w3p) + static_cast<long long>(w2p.size());
  const long long rhs = leaf_count(w2p) + static_cast<long long>(w3p.size());
  if (lhs >= rhs) {
    if (!w3p.empty()) res.s_star = w3p.front();
  } else {
    for (Vertex s : w2p)
      if (leaves[s] > 1) {
        res.s_star = s;
        break;
      }
  }
  for (Vertex s : w0_leafless) res.w2.push_back(s);
  for (Vertex s : w2p)
    if (s != res.s_star) res.w2.push_back(s);
  for (Vertex s : w3p)
    if (s != res.s_star) res.w3.push_back(s);
  std::sort(res.w2.begin(), res.w2.end());
  {
    const long long l_star = res.s_star == kNoVertex ? 0 : leaves[res.s_star];
    res.leaf_surplus_ok = leaf_count(res.w3) + l_star + static_cast<long long>(res.w2.size()) >=
                    leaf_count(res.w2) + static_cast<long long>(res.w3.size());
  }

  std::vector<int> seed_part(static_cast<std::size_t>(n), -1);
  for (Vertex s : res.w1) seed_part[s] = 0;
  for (Vertex s : res.w2) seed_part[s] = 1;
  for (Vertex s : res.w3) seed_part[s] = 2;
  if (res.s_star != kNoVertex) seed_part[res.s_star] = detail::kOnW;

  // T': seeds, leaves, every non-bad micro-tree, one bad tree per W1 seed.
  res.in_tprime.assign(static_cast<std::size_t>(n), 0);
  for (Vertex s : d.seeds) res.in_tprime[s] = 1;
  for (const auto& mt : d.L) res.in_tprime[mt.root] = 1;
  for (std::size_t i = 0; i < d.F1.size(); ++i)
    if (!bad[i])
      for (Vertex v : d.F1[i].vertices) res.in_tprime[v] = 1;
  for (const auto& mt : d.F2)
    for (Vertex v : mt.vertices) res.in_tprime[v] = 1;
  std::vector<char> w1_tree(d.F1.size(), 0);
  for (Vertex s : res.w1)
    if (!bad_at[s].empty()) {
      w1_tree[bad_at[s].front()] = 1;
      for (Vertex v : d.F1[bad_at[s].front()].vertices) res.in_tprime[v] = 1;
    }

  // Part plan for every vertex of T'.
  std::vector<int> plan(static_cast<std::size_t>(n), -1);
  for (Vertex s : d.seeds) plan[s] = seed_part[s];
  for (const auto& mt : d.L) plan[mt.root] = seed_part[mt.parent_seed] == 1 ? 2 : 1;
  std::vector<std::pair<const MicroTree*, bool>> planned;  // (tree, chosen bad tree)
  for (std::size_t i = 0; i < d.F1.size(); ++i)
    if (!bad[i] || w1_tree[i]) planned.emplace_back(&d.F1[i], bad[i] != 0);
  for (const auto& mt : d.F2) planned.emplace_back(&mt, false);

  auto bump = [&](const std::string& c) { ++res.cases[c]; };
  for (const auto& [mtp, chosen_bad] : planned) {
    const MicroTree& mt = *mtp;
    const Vertex r = mt.root;
    const Vertex s = mt.parent_seed;
    const int js = seed_part[s];
    auto dist_side = [&](Vertex v) { return (t.depth(v) - t.depth(r)) & 1; };
    if (chosen_bad) {
      // Chosen bad tree at a W1 seed: ends in H2, middle in H1.
      for (Vertex v : mt.vertices) plan[v] = dist_side(v) == 0 ? 1 : 0;
      bump("w1-bad-tree");
      continue;
    }
    const Vertex p = mt.two_seeded() ? mt.connector : kNoVertex;
    const int j = p == kNoVertex ? -1 : seed_part[mt.second_seed];
    int i;
    if (js == 0) {
      i = 2;
    } else if (js == 2) {
      i = 0;
    } else {
      i = (j == 0 || j == 2) ? j : 0;
    }
    auto standard = [&](Vertex v_extra) {
      // r (and v_extra) into H_i; larger class of the rest into H2, the other into the opposite side.
      std::vector<Vertex> cls[2];
      for (Vertex v : mt.vertices)
        if (v != r && v != v_extra) cls[dist_side(v)].push_back(v);
      int big = cls[1].size() > cls[0].size() ? 1 : 0;
      if (cls[0].size() == cls[1].size()) big = 1;  // the class next to r goes to H2
      plan[r] = i;
      if (v_extra != kNoVertex) plan[v_extra] = i;
      for (Vertex v : cls[big]) plan[v] = 1;
      for (Vertex v : cls[1 - big]) plan[v] = detail::other_side(i);
    };
    const bool simple = p == kNoVertex || p == r || j == i || j == detail::kOnW;
    if (simple) {
      long long a = 0, b = 0;
      for (Vertex v : mt.vertices)
        if (v != r) (dist_side(v) ? a : b) += 1;
      if (a == b && js == 0) {
        Vertex v_extra = kNoVertex;
        for (Vertex v : mt.vertices)
          if (v != r && dist_side(v) == 0 && (v_extra == kNoVertex || v_extra == p)) v_extra = v;
        if (v_extra == kNoVertex) {
          standard(kNoVertex);
          bump("equal-classes-no-spare");
        } else {
          standard(v_extra);
          bump("equal-classes-w1");
        }
      } else {
        standard(kNoVertex);
        bump(p == kNoVertex ? "standard" : "standard-with-seed-parent");
      }
    } else if (!(t.parent(p) == r)) {
      // r and p share H_i; the rest by classes.
      std::vector<Vertex> cls[2];
      for (Vertex v : mt.vertices)
        if (v != r && v != p) cls[t.side(v)].push_back(v);
      const int big = cls[1].size() > cls[0].size() ? 1 : 0;
      plan[r] = plan[p] = i;
      for (Vertex v : cls[big]) plan[v] = 1;
      for (Vertex v : cls[1 - big]) plan[v] = detail::other_side(i);
      if (cls[0].size() == cls[1].size() && js == 0) {
        Vertex v_extra = kNoVertex;
        for (Vertex v : mt.vertices) {
          if (v == r || v == p || t.parent(v) == r || t.parent(v) == p || t.parent(r) == v || t.parent(p) == v)
            continue;
          v_extra = v;
          break;
        }
        if (v_extra != kNoVertex) {
          // Its neighbours must leave H_i: they sit in the other class, which goes to H2.
          const int vc = t.side(v_extra);
          for (Vertex v : cls[vc]) plan[v] = detail::other_side(i);
          for (Vertex v : cls[1 - vc]) plan[v] = 1;
          plan[v_extra] = i;
          bump("separate-seed-parent-extra");
        } else {
          const Vertex x2 = t.parent(p);
          const Vertex x1 = x2 == kNoVertex ? kNoVertex : t.parent(x2);
          if (x1 != r) return fail("routing dead end: no four-vertex path in tree rooted at " + std::to_string(r));
          for (Vertex v : mt.vertices) plan[v] = 1;
          plan[r] = plan[p] = i;
          plan[x2] = detail::other_side(i);
          bump("four-vertex-path");
        }
      } else {
        bump("separate-seed-parent");
      }
    } else {
      // r adjacent to p: s in W1 and the second seed in W2.
      if (js != 0 || j != 1) return fail("routing dead end at tree rooted at " + std::to_string(r));
      plan[r] = 2;
      plan[p] = 0;
      std::vector<Vertex> rc[2], pc[2];
      for (Vertex v : mt.vertices) {
        if (v == r || v == p) continue;
        bool under_p = false;
        for (Vertex x = v; x != kNoVertex && x != r; x = t.parent(x)) under_p = under_p || x == p;
        if (under_p)
          pc[(t.depth(v) - t.depth(p)) & 1].push_back(v);
        else
          rc[dist_side(v)].push_back(v);
      }
      const int rbig = rc[1].size() >= rc[0].size() ? 1 : 0;
      for (Vertex v : rc[rbig]) plan[v] = 1;
      for (Vertex v : rc[1 - rbig]) plan[v] = 0;
      const int pbig = pc[1].size() >= pc[0].size() ? 1 : 0;
      for (Vertex v : pc[pbig]) plan[v] = 1;
      for (Vertex v : pc[1 - pbig]) plan[v] = 2;
      bump("seed-parent-next-to-root");
      if (rc[0].empty() && rc[1].empty() && pc[0].size() == pc[1].size() && !pc[0].empty()) {
        plan[pc[0].front()] = 0;  // even distance from p, so not adjacent to it
        bump("reembed-h3-to-h1");
      } else if (pc[0].size() + pc[1].size() <= 2 &&
                 std::llabs(static_cast<long long>(rc[0].size()) - static_cast<long long>(rc[1].size())) <= 1) {
        int moved = 0;
        for (Vertex v : rc[1 - rbig]) {
          if (moved == 2) break;
          if (t.parent(v) == r) continue;
          plan[v] = 2;
          ++moved;
        }
        if (moved) bump("reembed-h1-to-h3");
      }
    }
    // The tree must leave room for H2 to dominate; fix with single moves if not.
    auto counts = [&] {
      std::array<long long, 3> c{};
      for (Vertex v : mt.vertices) ++c[plan[v]];
      return c;
    };
    auto legal = [&](Vertex v, int part) {
      if (plan[t.parent(v)] == part) return false;
      for (Vertex ch : t.children(v))
        if (plan[ch] == part) return false;
      return true;
    };
    auto c = counts();
    const long long seed_in_h1 = js == 0 ? 1 : 0;
    for (int guard = 0; guard < mt.size() && (c[1] < c[2] || c[1] < c[0] + seed_in_h1); ++guard) {
      const int from = c[2] > c[0] + seed_in_h1 ? 2 : 0;
      bool moved = false;
      for (Vertex v : mt.vertices)
        if (plan[v] == from && legal(v, 1)) {
          plan[v] = 1;
          moved = true;
          break;
        }
      if (!moved) break;
      bump("balance-fix");
      c = counts();
    }
    for (Vertex v : mt.vertices) {
      if (plan[v] == plan[t.parent(v)] && plan[v] != detail::kOnW)
        return fail("routing placed adjacent vertices in one part at tree rooted at " + std::to_string(r));
      if (is_seed[t.parent(v)] && t.parent(v) != s) return fail("micro-tree contains an unexpected seed");
    }
    if (p != kNoVertex && j != detail::kOnW && plan[p] == j)
      return fail("routing put a seed's parent into the seed's part at tree rooted at " + std::to_string(r));
  }

  // Place T' in preorder.
  detail::PlacementContext cx(h.graph, t, h.parts, h.w);
  for (Vertex v : t.preorder()) {
    if (!res.in_tprime[v]) continue;
    const Vertex par = t.parent(v);
    const Vertex near = par == kNoVertex ? kNoVertex : cx.phi[par];
    const Vertex img = cx.pick(plan[v], {near});
    if (img == kNoVertex) return fail("no free vertex in the planned part for tree vertex " + std::to_string(v));
    cx.put(v, img);
  }
  res.phi = cx.phi;

  // Independent recount of the conclusions.
  const auto part_of = h.part_of();
  res.tprime_size = std::count(res.in_tprime.begin(), res.in_tprime.end(), 1);
  res.size_ok = 50 * res.tprime_size <= m;
  for (Vertex v = 0; v < n; ++v)
    if (res.in_tprime[v]) {
      const int pt = part_of[res.phi[v]];
      if (pt >= 0 && pt < 3) ++res.part_counts[pt];
    }
  bool rest_bad = true;
  for (Vertex v = 0; v < n; ++v) {
    if (res.in_tprime[v]) continue;
    // Outside T': must sit in a bad F1 tree.
    bool found = false;
    for (std::size_t i = 0; i < d.F1.size() && !found; ++i)
      found = bad[i] && std::binary_search(d.F1[i].vertices.begin(), d.F1[i].vertices.end(), v);
    rest_bad = rest_bad && found;
  }
  for (std::size_t i = 0; i < d.F1.size(); ++i) {
    if (!bad[i] || res.in_tprime[d.F1[i].root]) continue;
    const int pt = part_of[res.phi[d.F1[i].parent_seed]];
    res.bad_left_at_h2 += pt == 1 || pt == 5 ? 1 : 0;
  }
  res.conclusion_i = rest_bad && 400 * res.bad_left_at_h2 >= 33 * m;
  res.conclusion_ii = res.part_counts[1] >= res.part_counts[0] && res.part_counts[1] >= res.part_counts[2];
  return res;
}

// Third vertices that cannot all be matched into the free rest of one part.
struct ThirdVertexObstruction {
  int part = -1;
  std::vector<Vertex> second_images;  // A'
  std::vector<Vertex> free_part;      // U_i
  long long neighbourhood = 0;        // |N(A') cap U_i|

  bool verify(const Graph& g) const {
    long long n = 0;
    for (Vertex u : free_part) {
      bool hit = false;
      for (Vertex a : second_images) hit = hit || g.has_edge(a, u);
      n += hit ? 1 : 0;
    }
    return n == neighbourhood && n < static_cast<long long>(second_images.size());
  }
};

struct BadHeavyResult {
  FirstStageResult first;
  Embedding phi;
  Verdict verdict = Verdict::fail("not run");
  std::optional<ThirdVertexObstruction> obstruction;
  long long filled_small_parts = 0;
  long long balancing_trees = 0;
  long long even_trees = 0;
  long long triples = 0;
  std::vector<std::string> notes;
  std::string error;

  bool ok() const { return error.empty() && verdict.ok; }
};

// Embeds all of t: T' first, then bad trees filling H4 and H5, balancing H1,
// H2, H3, spreading the rest evenly and matching the last vertices by parts.
inline BadHeavyResult embed_bad_heavy(const StructuredHost& h, const RootedTree& t, Ratio beta,
                                   const StructuredOptions& opt = {}) {
  BadHeavyResult res;
  auto fail = [&](std::string why) {
    res.error = std::move(why);
    res.verdict = Verdict::fail(res.error);
    return res;
  };
  if (auto v = check_structured_host(h); !v) return fail("hypothesis: " + v.reason);
  const long long m = t.edge_count();
  if (m != h.m()) return fail("hypothesis: tree and host sizes differ");
  const Ratio beta_sq_m = beta * beta * Ratio{m, 1};
  if (!(beta_sq_m > Ratio{250, 1})) {
    if (opt.strict_constants) return fail("hypothesis: beta^2 m <= 250");
    res.notes.push_back("beta^2 m = " + beta_sq_m.str() + " is below 250; continuing at desk scale");
  }
  const TreeDecomposition d = cut_tree(t, beta, true);
  res.first = embed_first_stage(h, t, d, opt);
  if (!res.first.ok()) return fail(res.first.error);

  detail::PlacementContext cx(h.graph, t, h.parts, h.w);
  for (Vertex v = 0; v < t.size(); ++v)
    if (res.first.phi.contains(v)) cx.put(v, res.first.phi[v]);
  const auto part_of = h.part_of();

  // Remaining bad trees as (seed, root, middle, end).
  struct Bad {
    Vertex seed, r, mid, end;
  };
  std::vector<Bad> at_h2, elsewhere;
  for (const auto& mt : d.F1) {
    if (res.first.in_tprime[mt.root] || !classify(t, mt.vertices, mt.root).is_bad) continue;
    const Vertex mid = t.children(mt.root).front();
    const Vertex end = t.children(mid).front();
    const Bad b{mt.parent_seed, mt.root, mid, end};
    const int pt = part_of[cx.phi[b.seed]];
    (pt == 1 || pt == 5 ? at_h2 : elsewhere).push_back(b);
  }
  std::reverse(at_h2.begin(), at_h2.end());  // pop from the back in tree order

  // Places a bad tree along parts (pr, pm, pe); the end may be a fixed vertex.
  auto place = [&](const Bad& b, int pr, int pm, int pe, Vertex fixed_end = kNoVertex) {
    const Vertex s_img = cx.phi[b.seed];
    for (Vertex r : h.parts[pr]) {
      if (cx.used[r] || !h.graph.has_edge(r, s_img)) continue;
      cx.used[r] = 1;
      const Vertex mid = cx.pick(pm, {r, fixed_end});
      Vertex end = kNoVertex;
      if (mid != kNoVertex) {
        cx.used[mid] = 1;
        end = fixed_end != kNoVertex ? fixed_end : cx.pick(pe, {mid});
        cx.used[mid] = 0;
      }
      cx.used[r] = 0;
      if (end == kNoVertex) continue;
      cx.put(b.r, r);
      cx.put(b.mid, mid);
      cx.put(b.end, end);
      return true;
    }
    return false;
  };
  auto take_h2 = [&]() -> std::optional<Bad> {
    if (at_h2.empty()) return std::nullopt;
    Bad b = at_h2.back();
    at_h2.pop_back();
    return b;
  };

  // Fill H5 through H1 -> H3 -> x, H4 (and w if still free) through H1 or H3 -> H2 -> x.
  std::vector<std::pair<Vertex, int>> targets;
  for (Vertex x : h.parts[4]) targets.emplace_back(x, 2);
  for (Vertex x : h.parts[3]) targets.emplace_back(x, 1);
  if (!cx.used[h.w]) {
    targets.emplace_back(h.w, 1);
    res.notes.push_back("w left free by the first stage; filled like an H4 vertex");
  }
  for (auto [x, mid_part] : targets) {
    auto b = take_h2();
    if (!b) return fail("ran out of bad trees at H2 while filling H4 and H5");
    bool ok = false;
    if (mid_part == 2) {
      ok = place(*b, 0, 2, -1, x);
    } else {
      const int first = cx.used_in(0) <= cx.used_in(2) ? 0 : 2;
      ok = place(*b, first, 1, -1, x) || place(*b, detail::other_side(first), 1, -1, x);
    }
    if (!ok) return fail("no route for a bad tree ending at vertex " + std::to_string(x));
    ++res.filled_small_parts;
  }

  // Balance H1, H2, H3: shift with H2 first, then H1/H3 only.
  for (;;) {
    const long long d1 = cx.used_in(1) - cx.used_in(0);
    const long long d3 = cx.used_in(1) - cx.used_in(2);
    if (d1 == 0 && d3 == 0) break;
    if (d1 < 0 || d3 < 0) return fail("H2 holds fewer used vertices than H1 or H3 after the fill");
    auto b = take_h2();
    if (!b) return fail("ran out of bad trees at H2 while balancing");
    bool ok;
    if (d1 > 2 * d3)
      ok = place(*b, 0, 1, 0);
    else if (d3 > 2 * d1)
      ok = place(*b, 2, 1, 2);
    else if (d1 >= d3)
      ok = place(*b, 0, 2, 0);
    else
      ok = place(*b, 2, 0, 2);
    if (!ok) return fail("no route for a balancing bad tree");
    ++res.balancing_trees;
  }
  while (at_h2.size() % 3 != 0) {
    auto b = take_h2();
    if (!place(*b, 0, 1, 2) && !place(*b, 2, 1, 0)) return fail("no route for an evening bad tree");
    ++res.even_trees;
  }

  // Bad trees elsewhere: one vertex in each part.
  for (const Bad& b : elsewhere) {
    const int sp = part_of[cx.phi[b.seed]];
    bool ok = false;
    static constexpr std::array<std::array<int, 3>, 6> kPerms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (const auto& pm : kPerms) {
      if (pm[0] == sp) continue;
      if ((ok = place(b, pm[0], pm[1], pm[2]))) break;
    }
    if (!ok) return fail("no route for a bad tree at seed " + std::to_string(b.seed));
    ++res.even_trees;
  }

  // Remaining trees at H2 three at a time; third vertices by matching.
  struct Pending {
    Vertex end;
    Vertex mid_image;
  };
  std::array<std::vector<Pending>, 3> pending;
  static constexpr std::array<std::array<int, 3>, 3> kTriple{{{2, 1, 0}, {0, 2, 1}, {0, 1, 2}}};
  while (!at_h2.empty()) {
    for (const auto& pat : kTriple) {
      const Bad b = *take_h2();
      const Vertex s_img = cx.phi[b.seed];
      Vertex r = kNoVertex, mid = kNoVertex;
      for (Vertex x : h.parts[pat[0]]) {
        if (cx.used[x] || !h.graph.has_edge(x, s_img)) continue;
        cx.used[x] = 1;
        mid = cx.pick(pat[1], {x});
        cx.used[x] = 0;
        if (mid != kNoVertex) {
          r = x;
          break;
        }
      }
      if (r == kNoVertex) return fail("no route for the first two vertices of a path at seed " + std::to_string(b.seed));
      cx.put(b.r, r);
      cx.put(b.mid, mid);
      pending[pat[2]].push_back({b.end, mid});
    }
    ++res.triples;
  }
  for (int part = 0; part < 3; ++part) {
    std::vector<Vertex> free;
    for (Vertex x : h.parts[part])
      if (!cx.used[x]) free.push_back(x);
    const auto& pend = pending[part];
    if (free.size() != pend.size())
      return fail("part H" + std::to_string(part + 1) + " has " + std::to_string(free.size()) + " free vertices for " +
                  std::to_string(pend.size()) + " last vertices");
    BipartiteMatcher bip(static_cast<int>(pend.size()), static_cast<int>(free.size()));
    for (std::size_t a = 0; a < pend.size(); ++a)
      for (std::size_t u = 0; u < free.size(); ++u)
        if (h.graph.has_edge(pend[a].mid_image, free[u])) bip.add_edge(static_cast<int>(a), static_cast<int>(u));
    if (bip.solve() != static_cast<int>(pend.size())) {
      auto [left, right] = bip.hall_violator();
      ThirdVertexObstruction ob;
      ob.part = part;
      for (int l : left) ob.second_images.push_back(pend[l].mid_image);
      ob.free_part = free;
      ob.neighbourhood = static_cast<long long>(right.size());
      res.obstruction = ob;
      return fail("last vertices of H" + std::to_string(part + 1) + " cannot be matched");
    }
    for (std::size_t a = 0; a < pend.size(); ++a) cx.put(pend[a].end, free[bip.left_match(static_cast<int>(a))]);
  }
  res.phi = cx.phi;
  res.verdict = verify_embedding(h.graph, t, res.phi, true);
  if (!res.verdict.ok) res.error = res.verdict.reason;
  return res;
}

}  // namespace treembed

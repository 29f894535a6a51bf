#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/bipartite.hpp"
#include "treembed/blossom.hpp"
#include "treembed/graph.hpp"
#include "treembed/ratio.hpp"

namespace treembed {

// ---------------------------------------------------------------------------
// Edge double counting

// count >= (1/2 - sqrt(psi)) * total, decided exactly.
inline bool at_least_half_minus_sqrt(long long count, long long total, Ratio psi) {
  const __int128 gap = static_cast<__int128>(total) - 2 * static_cast<__int128>(count);
  if (gap <= 0) return true;
  // gap/2 <= sqrt(psi) * total  <=>  den * gap^2 <= 4 * num * total^2
  return static_cast<__int128>(psi.den()) * gap * gap <=
         static_cast<__int128>(4) * psi.num() * total * total;
}

// size >= (1/3 + sqrt(psi)/10) * n, decided exactly.
inline bool meets_double_counting_bound(long long size, long long n, Ratio psi) {
  const __int128 lhs = 30 * static_cast<__int128>(size) - 10 * static_cast<__int128>(n);
  if (lhs < 0) return false;
  // lhs >= 3 sqrt(psi) n  <=>  den * lhs^2 >= 9 * num * n^2
  return static_cast<__int128>(psi.den()) * lhs * lhs >=
         static_cast<__int128>(9) * psi.num() * n * n;
}

// deg >= (2/3 - psi) * n, decided exactly.
inline bool degree_at_least_two_thirds_minus(long long deg, long long n, Ratio psi) {
  return static_cast<__int128>(3) * psi.den() * deg >=
         (static_cast<__int128>(2) * psi.den() - static_cast<__int128>(3) * psi.num()) * n;
}

// All vertices with at least (1/2 - sqrt(psi))|S| neighbours in S. Throws
// when a vertex of S has degree below (2/3 - psi)n.
inline std::vector<Vertex> high_degree_set(const Graph& g, std::span<const Vertex> s, Ratio psi) {
  if (psi <= Ratio{0, 1} || psi >= Ratio{1, 3}) throw std::invalid_argument("psi must lie in (0, 1/3)");
  const int n = g.vertex_count();
  for (Vertex v : s)
    if (!degree_at_least_two_thirds_minus(g.degree(v), n, psi))
      throw std::invalid_argument("vertex " + std::to_string(v) + " of S has degree " +
                                  std::to_string(g.degree(v)) + " below (2/3 - psi)n");
  std::vector<int> into(static_cast<std::size_t>(n), 0);
  for (Vertex v : s)
    for (Vertex u : g.neighbors(v)) ++into[u];
  std::vector<Vertex> out;
  for (Vertex v = 0; v < n; ++v)
    if (at_least_half_minus_sqrt(into[v], static_cast<long long>(s.size()), psi)) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// N-good matchings

struct NGoodMatching {
  std::vector<std::pair<Vertex, Vertex>> edges;
  std::vector<Vertex> excluded;  // Y
  std::vector<Vertex> mate;      // per vertex, kNoVertex when unmatched
};

// A set of vertices outside N whose neighbourhood inside N is too small.
struct HallWitness {
  std::vector<Vertex> deficient;
  std::vector<Vertex> neighbourhood;
  int slack = 0;

  // |N(deficient) ∩ N| < |deficient| - slack, recomputed from h.
  bool verify(const Graph& h, const std::vector<char>& in_n) const {
    std::vector<char> seen(static_cast<std::size_t>(h.vertex_count()), 0);
    long long count = 0;
    for (Vertex v : deficient) {
      if (in_n[v]) return false;
      for (Vertex u : h.neighbors(v))
        if (in_n[u] && !seen[u]) {
          seen[u] = 1;
          ++count;
        }
    }
    return count < static_cast<long long>(deficient.size()) - slack;
  }
};

struct MatchOptions {
  // Skips the size and degree preconditions and reports Hall witnesses when
  // more than `slack` outside vertices stay unmatched.
  bool relaxed = false;
  int slack = -1;  // default floor(3 xi p)
};

struct MatchingResult {
  std::optional<NGoodMatching> matching;
  std::optional<HallWitness> witness;
  std::string failure;

  bool ok() const { return matching.has_value(); }
};

namespace detail {

inline std::vector<char> membership(int n, std::span<const Vertex> set) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (Vertex v : set) {
    if (v < 0 || v >= n) throw std::invalid_argument("vertex out of range in N");
    in[v] = 1;
  }
  return in;
}

inline long long required_n_size(int p, Ratio xi) {
  // ceil((2/3 - 2 xi) p)
  const Ratio frac = Ratio{2, 3} - xi * Ratio{2, 1};
  return frac.ceil_times(p);
}

inline void check_match_preconditions(const Graph& h, std::size_t n_size, Ratio xi) {
  const int p = h.vertex_count();
  if (xi <= Ratio{0, 1} || xi >= Ratio{1, 20}) throw std::invalid_argument("xi must lie in (0, 1/20)");
  if (static_cast<long long>(n_size) != required_n_size(p, xi))
    throw std::invalid_argument("|N| must equal ceil((2/3 - 2xi)p) = " +
                                std::to_string(required_n_size(p, xi)));
  for (Vertex v = 0; v < p; ++v)
    if (!degree_at_least_two_thirds_minus(h.degree(v), p, xi))
      throw std::invalid_argument("vertex " + std::to_string(v) + " has degree below (2/3 - xi)p");
}

}  // namespace detail

inline MatchingResult n_good_matching(const Graph& h, std::span<const Vertex> n_set, Ratio xi,
                                      MatchOptions options = {}) {
  const int p = h.vertex_count();
  if (!options.relaxed) detail::check_match_preconditions(h, n_set.size(), xi);
  const auto in_n = detail::membership(p, n_set);
  const int slack = options.slack >= 0 ? options.slack : static_cast<int>((xi * Ratio{3, 1}).floor_times(p));

  // Greedy: outside vertices by increasing degree into N, each to its first free N neighbour.
  std::vector<Vertex> outside;
  std::vector<int> n_index(static_cast<std::size_t>(p), -1);
  std::vector<Vertex> n_list;
  for (Vertex v = 0; v < p; ++v) {
    if (in_n[v]) {
      n_index[v] = static_cast<int>(n_list.size());
      n_list.push_back(v);
    } else {
      outside.push_back(v);
    }
  }
  std::vector<int> deg_into(static_cast<std::size_t>(p), 0);
  for (Vertex v : outside)
    for (Vertex u : h.neighbors(v)) deg_into[v] += in_n[u] ? 1 : 0;
  std::stable_sort(outside.begin(), outside.end(),
                   [&](Vertex a, Vertex b) { return deg_into[a] < deg_into[b]; });

  BipartiteMatcher bip(static_cast<int>(outside.size()), static_cast<int>(n_list.size()));
  for (std::size_t i = 0; i < outside.size(); ++i) {
    std::vector<int> targets;
    for (Vertex u : h.neighbors(outside[i]))
      if (in_n[u]) targets.push_back(n_index[u]);
    std::sort(targets.begin(), targets.end());
    for (int t : targets) bip.add_edge(static_cast<int>(i), t);
    for (int t : targets)
      if (bip.right_match(t) == -1) {
        bip.force(static_cast<int>(i), t);
        break;
      }
  }
  bip.solve();

  MatchingResult result;
  std::vector<char> in_y(static_cast<std::size_t>(p), 0);
  std::vector<Vertex> y;
  for (std::size_t i = 0; i < outside.size(); ++i)
    if (bip.left_match(static_cast<int>(i)) == -1) {
      y.push_back(outside[i]);
      in_y[outside[i]] = 1;
    }
  if (options.relaxed && static_cast<int>(y.size()) > slack) {
    auto [left, right] = bip.hall_violator();
    HallWitness w;
    w.slack = slack;
    for (int l : left) w.deficient.push_back(outside[l]);
    for (int r : right) w.neighbourhood.push_back(n_list[r]);
    std::sort(w.deficient.begin(), w.deficient.end());
    std::sort(w.neighbourhood.begin(), w.neighbourhood.end());
    result.witness = std::move(w);
    result.failure = std::to_string(y.size()) + " outside vertices cannot be matched into N";
    return result;
  }

  std::vector<int> mate(static_cast<std::size_t>(p), -1);
  for (std::size_t i = 0; i < outside.size(); ++i) {
    const int r = bip.left_match(static_cast<int>(i));
    if (r == -1) continue;
    mate[outside[i]] = n_list[r];
    mate[n_list[r]] = outside[i];
  }

  // Parity: drop the last matched outside vertex so that H - Y has even order.
  if ((p - static_cast<int>(y.size())) % 2 != 0) {
    auto it = std::find_if(outside.rbegin(), outside.rend(), [&](Vertex v) { return !in_y[v]; });
    if (it == outside.rend() && options.relaxed && !n_list.empty()) {
      // Relaxed mode: give up the largest unmatched N vertex instead.
      const Vertex v = n_list.back();
      if (mate[v] != -1) mate[mate[v]] = -1;
      mate[v] = -1;
      in_y[v] = 1;
      y.push_back(v);
    } else if (it == outside.rend()) {
      result.failure = "H - Y has odd order and every outside vertex is already excluded";
      return result;
    } else {
      const Vertex v = *it;
      mate[mate[v]] = -1;
      mate[v] = -1;
      in_y[v] = 1;
      y.push_back(v);
    }
  }

  // Complete the matching on H - Y using only N-good edges; augmenting paths
  // start at free N vertices and never uncover a matched vertex.
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(p));
  for (Vertex v = 0; v < p; ++v) {
    if (in_y[v]) continue;
    for (Vertex u : h.neighbors(v))
      if (!in_y[u] && (in_n[u] || in_n[v])) adj[v].push_back(u);
    std::sort(adj[v].begin(), adj[v].end());
  }
  GeneralMatcher gm(std::move(adj));
  for (Vertex v = 0; v < p; ++v)
    if (mate[v] > v) gm.set_mate(v, mate[v]);
  std::vector<int> free_n;
  for (Vertex v : n_list)
    if (gm.mate(v) == -1) free_n.push_back(v);
  gm.augment_from(free_n);

  NGoodMatching m;
  m.mate.assign(static_cast<std::size_t>(p), kNoVertex);
  std::vector<Vertex> unmatched;
  for (Vertex v = 0; v < p; ++v) {
    if (in_y[v]) continue;
    const int u = gm.mate(v);
    if (u == -1) {
      unmatched.push_back(v);
      continue;
    }
    m.mate[v] = u;
    if (v < u) m.edges.emplace_back(v, u);
  }
  if (!unmatched.empty()) {
    result.failure = std::to_string(unmatched.size()) + " vertices of N stay unmatched, first " +
                     std::to_string(unmatched.front());
    return result;
  }
  std::sort(y.begin(), y.end());
  m.excluded = std::move(y);
  result.matching = std::move(m);
  return result;
}

// ---------------------------------------------------------------------------
// Path partitions

enum class PartitionKind { in_good, out_good, in_modified, out_modified };

inline const char* to_string(PartitionKind k) {
  switch (k) {
    case PartitionKind::in_good: return "in-good";
    case PartitionKind::out_good: return "out-good";
    case PartitionKind::in_modified: return "in-modified";
    case PartitionKind::out_modified: return "out-modified";
  }
  return "?";
}

// Branching shape with vertices A, A', B, B', C, D, E, E', F, F' and edges
// AB, A'B', BC, B'C, CD, DE, DE', EF, E'F'.
struct BranchShape {
  enum Slot { A, A2, B, B2, C, D, E, E2, F, F2 };
  std::array<Vertex, 10> at{};

  static constexpr std::array<std::pair<int, int>, 9> kEdges{
      {{A, B}, {A2, B2}, {B, C}, {B2, C}, {C, D}, {D, E}, {D, E2}, {E, F}, {E2, F2}}};
};

struct PathPartition {
  PartitionKind kind = PartitionKind::in_good;
  std::vector<std::vector<Vertex>> paths;
  std::vector<BranchShape> branches;
  std::vector<Vertex> excluded;
};

namespace detail {

inline bool is_in_kind(PartitionKind k) {
  return k == PartitionKind::in_good || k == PartitionKind::in_modified;
}

// Positions that must lie in N for a path of the given length.
inline std::vector<int> required_positions(bool in_kind, std::size_t len) {
  if (len == 2) return {0, 1};
  if (len == 4) return in_kind ? std::vector<int>{0, 3} : std::vector<int>{1, 2};
  if (len == 6) return in_kind ? std::vector<int>{0, 2, 3, 5} : std::vector<int>{1, 2, 3, 4};
  return {};
}

}  // namespace detail

inline Verdict validate_partition(const Graph& h, const PathPartition& part, std::span<const Vertex> n_set) {
  const int p = h.vertex_count();
  const auto in_n = detail::membership(p, n_set);
  const bool in_kind = detail::is_in_kind(part.kind);
  std::vector<int> cover(static_cast<std::size_t>(p), 0);
  for (Vertex x : part.excluded) {
    if (x < 0 || x >= p) return Verdict::fail("excluded vertex out of range", x);
    ++cover[x];
  }
  for (const auto& path : part.paths) {
    const auto need = detail::required_positions(in_kind, path.size());
    if (need.empty())
      return Verdict::fail("path of " + std::to_string(path.size()) + " vertices", path.empty() ? kNoVertex : path[0]);
    for (Vertex v : path) {
      if (v < 0 || v >= p) return Verdict::fail("path vertex out of range", v);
      ++cover[v];
    }
    for (std::size_t i = 1; i < path.size(); ++i)
      if (!h.has_edge(path[i - 1], path[i]))
        return Verdict::fail("path uses a non-edge", path[i - 1], path[i]);
    for (int pos : need)
      if (!in_n[path[pos]])
        return Verdict::fail(std::string(to_string(part.kind)) + " path needs position " +
                                 std::to_string(pos) + " in N",
                             path[pos]);
  }
  if (!part.branches.empty() && (part.kind == PartitionKind::in_good || part.kind == PartitionKind::out_good))
    return Verdict::fail("branching shape in an unmodified partition", part.branches[0].at[0]);
  for (const auto& br : part.branches) {
    for (Vertex v : br.at) {
      if (v < 0 || v >= p) return Verdict::fail("branch vertex out of range", v);
      ++cover[v];
    }
    for (auto [a, b] : BranchShape::kEdges)
      if (!h.has_edge(br.at[a], br.at[b])) return Verdict::fail("branch uses a non-edge", br.at[a], br.at[b]);
    using S = BranchShape;
    const std::array<int, 6> need = in_kind ? std::array<int, 6>{S::A, S::A2, S::C, S::D, S::F, S::F2}
                                            : std::array<int, 6>{S::B, S::B2, S::C, S::D, S::E, S::E2};
    for (int slot : need)
      if (!in_n[br.at[slot]]) return Verdict::fail("branch vertex must lie in N", br.at[slot]);
  }
  for (Vertex v = 0; v < p; ++v) {
    if (cover[v] == 0) return Verdict::fail("vertex not covered", v);
    if (cover[v] > 1) return Verdict::fail("vertex covered twice", v);
  }
  return Verdict::pass();
}

// Checks that `edges` form a perfect N-good matching of H - excluded.
inline Verdict validate_matching(const Graph& h, const std::vector<std::pair<Vertex, Vertex>>& edges,
                                 std::span<const Vertex> excluded, std::span<const Vertex> n_set) {
  const int p = h.vertex_count();
  const auto in_n = detail::membership(p, n_set);
  std::vector<int> cover(static_cast<std::size_t>(p), 0);
  for (Vertex x : excluded) ++cover[x];
  for (auto [u, v] : edges) {
    if (!h.has_edge(u, v)) return Verdict::fail("matching uses a non-edge", u, v);
    if (!in_n[u] && !in_n[v]) return Verdict::fail("matching edge with both ends outside N", u, v);
    ++cover[u];
    ++cover[v];
  }
  for (Vertex v = 0; v < p; ++v)
    if (cover[v] != 1) return Verdict::fail(cover[v] == 0 ? "vertex not covered" : "vertex covered twice", v);
  return Verdict::pass();
}

// ---------------------------------------------------------------------------
// Good structures

struct GoodStructures {
  std::vector<Vertex> excluded;  // X
  std::vector<std::pair<Vertex, Vertex>> matching;  // on H - X
  PathPartition in_good;
  PathPartition out_good;
  // Pieces of X, for reporting.
  std::vector<Vertex> y, z, z_partners, z_second;
  int repaired = 0;  // auxiliary edges lost to X and re-matched
};

struct StructuresResult {
  std::optional<GoodStructures> structures;
  std::optional<HallWitness> witness;
  std::string failure;

  bool ok() const { return structures.has_value(); }
};

namespace detail {

struct AuxMatching {
  std::vector<Vertex> partner;      // per vertex
  std::vector<Vertex> uncovered;    // side vertices left unmatched
  int internal_vertices = 0;        // vertices covered by edges inside the side
};

// Maximum matching inside `side`, then the uncovered side vertices matched
// into the target set as far as possible.
inline AuxMatching auxiliary_matching(const Graph& h, const std::vector<Vertex>& side,
                                      const std::vector<char>& in_target) {
  const int p = h.vertex_count();
  AuxMatching aux;
  aux.partner.assign(static_cast<std::size_t>(p), kNoVertex);
  std::vector<int> local(static_cast<std::size_t>(p), -1);
  for (std::size_t i = 0; i < side.size(); ++i) local[side[i]] = static_cast<int>(i);
  std::vector<std::vector<int>> adj(side.size());
  for (std::size_t i = 0; i < side.size(); ++i) {
    for (Vertex u : h.neighbors(side[i]))
      if (local[u] != -1) adj[i].push_back(local[u]);
    std::sort(adj[i].begin(), adj[i].end());
  }
  GeneralMatcher gm(std::move(adj));
  gm.maximize();
  std::vector<Vertex> rest;
  for (std::size_t i = 0; i < side.size(); ++i) {
    const int j = gm.mate(static_cast<int>(i));
    if (j == -1) {
      rest.push_back(side[i]);
    } else {
      aux.partner[side[i]] = side[j];
      ++aux.internal_vertices;
    }
  }
  std::vector<Vertex> targets;
  std::vector<int> t_index(static_cast<std::size_t>(p), -1);
  for (Vertex v = 0; v < p; ++v)
    if (in_target[v]) {
      t_index[v] = static_cast<int>(targets.size());
      targets.push_back(v);
    }
  BipartiteMatcher bip(static_cast<int>(rest.size()), static_cast<int>(targets.size()));
  for (std::size_t i = 0; i < rest.size(); ++i) {
    std::vector<int> ts;
    for (Vertex u : h.neighbors(rest[i]))
      if (t_index[u] != -1) ts.push_back(t_index[u]);
    std::sort(ts.begin(), ts.end());
    for (int t : ts) bip.add_edge(static_cast<int>(i), t);
  }
  bip.solve();
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const int r = bip.left_match(static_cast<int>(i));
    if (r == -1) {
      aux.uncovered.push_back(rest[i]);
    } else {
      aux.partner[rest[i]] = targets[r];
      aux.partner[targets[r]] = rest[i];
    }
  }
  return aux;
}

// Components of M ∪ aux restricted to non-excluded vertices, as vertex
// sequences. Every component is a path because aux touches each vertex once.
inline std::vector<std::vector<Vertex>> union_paths(const std::vector<Vertex>& mate,
                                                    const std::vector<Vertex>& aux,
                                                    const std::vector<char>& excluded) {
  const int p = static_cast<int>(mate.size());
  auto live = [&](Vertex u) { return u != kNoVertex && !excluded[u]; };
  std::vector<char> done(static_cast<std::size_t>(p), 0);
  std::vector<std::vector<Vertex>> paths;
  auto degree = [&](Vertex v) { return (live(mate[v]) ? 1 : 0) + (live(aux[v]) ? 1 : 0); };
  for (Vertex start = 0; start < p; ++start) {
    if (excluded[start] || done[start] || degree(start) > 1) continue;
    std::vector<Vertex> path{start};
    done[start] = 1;
    Vertex prev = kNoVertex;
    Vertex cur = start;
    for (;;) {
      Vertex next = kNoVertex;
      if (live(mate[cur]) && mate[cur] != prev && !done[mate[cur]]) next = mate[cur];
      else if (live(aux[cur]) && aux[cur] != prev && !done[aux[cur]]) next = aux[cur];
      if (next == kNoVertex) break;
      path.push_back(next);
      done[next] = 1;
      prev = cur;
      cur = next;
    }
    paths.push_back(std::move(path));
  }
  // Anything left lies on a cycle; report it as one long sequence so the
  // validator rejects it.
  for (Vertex v = 0; v < p; ++v)
    if (!excluded[v] && !done[v]) {
      std::vector<Vertex> cyc;
      for (Vertex cur = v, prev = kNoVertex; !done[cur];) {
        cyc.push_back(cur);
        done[cur] = 1;
        const Vertex next = mate[cur] != prev && live(mate[cur]) && !done[mate[cur]] ? mate[cur] : aux[cur];
        prev = cur;
        if (!live(next)) break;
        cur = next;
      }
      paths.push_back(std::move(cyc));
    }
  return paths;
}

// Orients each path so that, for six-vertex paths, positions 2 and 3 are the
// inner vertices; the shapes are symmetric so only a canonical start matters.
inline void canonical_orientation(std::vector<std::vector<Vertex>>& paths) {
  for (auto& path : paths)
    if (path.size() >= 2 && path.front() > path.back()) std::reverse(path.begin(), path.end());
  std::sort(paths.begin(), paths.end());
}

struct StructureBuild {
  NGoodMatching m;
  std::vector<char> in_n, in_q, in_r, excluded;
  std::vector<Vertex> z, z_partners, z_second;
  AuxMatching aux_q, aux_r;
  int repaired = 0;
};

inline void exclude_with_mate(StructureBuild& b, Vertex v) {
  b.excluded[v] = 1;
  if (b.m.mate[v] != kNoVertex) b.excluded[b.m.mate[v]] = 1;
}

// Re-matches side vertices whose auxiliary partner was excluded; vertices
// that cannot be re-matched are excluded together with their M partner.
inline void repair_auxiliary(const Graph& h, StructureBuild& b, AuxMatching& aux,
                             const std::vector<char>& in_side, const std::vector<char>& in_target) {
  const int p = h.vertex_count();
  for (bool changed = true; changed;) {
    changed = false;
    for (Vertex v = 0; v < p; ++v)
      if (aux.partner[v] != kNoVertex && b.excluded[aux.partner[v]]) aux.partner[v] = kNoVertex;
    std::vector<Vertex> orphans;
    for (Vertex v = 0; v < p; ++v)
      if (in_side[v] && !b.excluded[v] && aux.partner[v] == kNoVertex) orphans.push_back(v);
    if (orphans.empty()) break;
    std::vector<Vertex> targets;
    std::vector<int> t_index(static_cast<std::size_t>(p), -1);
    for (Vertex v = 0; v < p; ++v)
      if (in_target[v] && !b.excluded[v] && aux.partner[v] == kNoVertex) {
        t_index[v] = static_cast<int>(targets.size());
        targets.push_back(v);
      }
    BipartiteMatcher bip(static_cast<int>(orphans.size()), static_cast<int>(targets.size()));
    for (std::size_t i = 0; i < orphans.size(); ++i)
      for (Vertex u : h.neighbors(orphans[i]))
        if (t_index[u] != -1) bip.add_edge(static_cast<int>(i), t_index[u]);
    bip.solve();
    for (std::size_t i = 0; i < orphans.size(); ++i) {
      const int r = bip.left_match(static_cast<int>(i));
      if (r != -1) {
        aux.partner[orphans[i]] = targets[r];
        aux.partner[targets[r]] = orphans[i];
        ++b.repaired;
      } else {
        exclude_with_mate(b, orphans[i]);
        changed = true;
      }
    }
  }
}

inline std::optional<StructureBuild> prepare_structures(const Graph& h, std::span<const Vertex> n_set,
                                                        Ratio xi, MatchOptions options,
                                                        StructuresResult& result) {
  auto mr = n_good_matching(h, n_set, xi, options);
  if (!mr.ok()) {
    result.witness = std::move(mr.witness);
    result.failure = std::move(mr.failure);
    return std::nullopt;
  }
  const int p = h.vertex_count();
  StructureBuild b;
  b.m = std::move(*mr.matching);
  b.in_n = membership(p, n_set);
  b.in_q.assign(static_cast<std::size_t>(p), 0);
  b.in_r.assign(static_cast<std::size_t>(p), 0);
  b.excluded.assign(static_cast<std::size_t>(p), 0);
  for (Vertex v : b.m.excluded) b.excluded[v] = 1;
  for (Vertex v = 0; v < p; ++v)
    if (!b.in_n[v] && !b.excluded[v]) {
      b.in_q[v] = 1;
      b.in_r[b.m.mate[v]] = 1;
    }
  return b;
}

inline std::vector<char> n_minus_r(const StructureBuild& b) {
  std::vector<char> out(b.in_n.size(), 0);
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = b.in_n[v] && !b.in_r[v];
  return out;
}

inline std::vector<Vertex> members(const std::vector<char>& mask, const std::vector<char>& skip) {
  std::vector<Vertex> out;
  for (std::size_t v = 0; v < mask.size(); ++v)
    if (mask[v] && !skip[v]) out.push_back(static_cast<Vertex>(v));
  return out;
}

inline std::vector<Vertex> to_list(const std::vector<char>& mask) {
  return members(mask, std::vector<char>(mask.size(), 0));
}

}  // namespace detail

inline StructuresResult good_structures(const Graph& h, std::span<const Vertex> n_set, Ratio xi,
                                        MatchOptions options = {}) {
  StructuresResult result;
  auto built = detail::prepare_structures(h, n_set, xi, options, result);
  if (!built) return result;
  auto& b = *built;
  const int p = h.vertex_count();
  const auto target = detail::n_minus_r(b);
  const std::vector<char> none(static_cast<std::size_t>(p), 0);

  b.aux_q = detail::auxiliary_matching(h, detail::members(b.in_q, none), target);
  for (Vertex v : b.aux_q.uncovered) {
    b.z.push_back(v);
    b.z_partners.push_back(b.m.mate[v]);
  }
  std::vector<char> in_z_partner(static_cast<std::size_t>(p), 0);
  for (Vertex v : b.z_partners) in_z_partner[v] = 1;
  b.aux_r = detail::auxiliary_matching(h, detail::members(b.in_r, in_z_partner), target);
  for (Vertex v : b.aux_r.uncovered) {
    b.z_second.push_back(v);
    b.z_second.push_back(b.m.mate[v]);
  }
  for (Vertex v : b.z) b.excluded[v] = 1;
  for (Vertex v : b.z_partners) b.excluded[v] = 1;
  for (Vertex v : b.z_second) b.excluded[v] = 1;

  // Excluding Z'' may strip auxiliary partners; repair both sides until stable.
  for (int round = 0; round < p; ++round) {
    const auto before = b.excluded;
    detail::repair_auxiliary(h, b, b.aux_q, b.in_q, target);
    detail::repair_auxiliary(h, b, b.aux_r, b.in_r, target);
    if (before == b.excluded) break;
  }

  GoodStructures gs;
  gs.y = b.m.excluded;
  gs.z = b.z;
  gs.z_partners = b.z_partners;
  gs.z_second = b.z_second;
  gs.repaired = b.repaired;
  gs.excluded = detail::to_list(b.excluded);
  for (auto [u, v] : b.m.edges)
    if (!b.excluded[u] && !b.excluded[v]) gs.matching.emplace_back(u, v);
  gs.in_good.kind = PartitionKind::in_good;
  gs.in_good.paths = detail::union_paths(b.m.mate, b.aux_q.partner, b.excluded);
  gs.in_good.excluded = gs.excluded;
  gs.out_good.kind = PartitionKind::out_good;
  gs.out_good.paths = detail::union_paths(b.m.mate, b.aux_r.partner, b.excluded);
  gs.out_good.excluded = gs.excluded;
  detail::canonical_orientation(gs.in_good.paths);
  detail::canonical_orientation(gs.out_good.paths);

  std::vector<Vertex> n_rest;
  for (Vertex v : n_set)
    if (!b.excluded[v]) n_rest.push_back(v);
  for (const PathPartition* part : {&gs.in_good, &gs.out_good}) {
    auto verdict = validate_partition(h, *part, n_rest);
    if (!verdict.ok) {
      result.failure = std::string(to_string(part->kind)) + " partition invalid: " + verdict.reason;
      return result;
    }
  }
  result.structures = std::move(gs);
  return result;
}

struct ModifiedResult {
  std::optional<PathPartition> partition;
  std::vector<Vertex> excluded;
  int internal_vertices = 0;  // vertices of the maximum matching inside the side
  bool used_branches = false;
  std::string failure;

  bool ok() const { return partition.has_value(); }
};

// In- or out-modified partition. The side (Q for in-modified, R for
// out-modified) first gets a maximum internal matching; if that covers more
// than `branch_threshold` vertices the standard partition is returned.
// Otherwise side vertices left unmatched are attached in pairs to the inner
// vertices C, D of six-vertex paths, forming branching shapes.
inline ModifiedResult modified_structures(const Graph& h, std::span<const Vertex> n_set, Ratio xi,
                                          PartitionKind kind, int branch_threshold,
                                          MatchOptions options = {}) {
  if (kind != PartitionKind::in_modified && kind != PartitionKind::out_modified)
    throw std::invalid_argument("modified_structures needs a modified kind");
  ModifiedResult out;
  StructuresResult scratch;
  auto built = detail::prepare_structures(h, n_set, xi, options, scratch);
  if (!built) {
    out.failure = "matching phase failed: " + scratch.failure;
    return out;
  }
  auto& b = *built;
  const int p = h.vertex_count();
  const bool in_kind = kind == PartitionKind::in_modified;
  const auto target = detail::n_minus_r(b);
  const std::vector<char> none(static_cast<std::size_t>(p), 0);
  const auto& side_mask = in_kind ? b.in_q : b.in_r;
  auto aux = detail::auxiliary_matching(h, detail::members(side_mask, none), target);
  out.internal_vertices = aux.internal_vertices;
  const bool branch = aux.internal_vertices <= branch_threshold;

  std::vector<char> leftover(static_cast<std::size_t>(p), 0);
  for (Vertex v : aux.uncovered) {
    if (branch) leftover[v] = 1;
    b.excluded[v] = 1;
    b.excluded[b.m.mate[v]] = 1;
  }
  detail::repair_auxiliary(h, b, aux, side_mask, target);

  PathPartition part;
  part.kind = kind;
  auto paths = detail::union_paths(b.m.mate, aux.partner, b.excluded);
  if (branch) {
    // Attach leftover side vertices pairwise at the inner vertices of six-paths.
    std::vector<Vertex> pending;
    for (Vertex v = 0; v < p; ++v)
      if (leftover[v]) pending.push_back(v);
    std::vector<char> used_path(paths.size(), 0);
    std::vector<char> placed(static_cast<std::size_t>(p), 0);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (placed[pending[i]]) continue;
      bool done = false;
      for (std::size_t j = i + 1; j < pending.size() && !done; ++j) {
        if (placed[pending[j]]) continue;
        for (std::size_t k = 0; k < paths.size() && !done; ++k) {
          if (used_path[k] || paths[k].size() != 6) continue;
          const auto& path = paths[k];
          for (int flip = 0; flip < 2 && !done; ++flip) {
            const Vertex c = flip ? path[3] : path[2];
            const Vertex d = flip ? path[2] : path[3];
            const Vertex r1 = pending[i];
            const Vertex r2 = pending[j];
            if (!h.has_edge(r1, c) || !h.has_edge(r2, d)) continue;
            BranchShape br;
            using S = BranchShape;
            br.at[S::A] = flip ? path[5] : path[0];
            br.at[S::B] = flip ? path[4] : path[1];
            br.at[S::C] = c;
            br.at[S::D] = d;
            br.at[S::E] = flip ? path[1] : path[4];
            br.at[S::F] = flip ? path[0] : path[5];
            br.at[S::B2] = r1;
            br.at[S::A2] = b.m.mate[r1];
            br.at[S::E2] = r2;
            br.at[S::F2] = b.m.mate[r2];
            part.branches.push_back(br);
            used_path[k] = 1;
            placed[r1] = placed[r2] = 1;
            for (Vertex v : {r1, b.m.mate[r1], r2, b.m.mate[r2]}) b.excluded[v] = 0;
            done = true;
          }
        }
      }
    }
    std::vector<std::vector<Vertex>> rest;
    for (std::size_t k = 0; k < paths.size(); ++k)
      if (!used_path[k]) rest.push_back(std::move(paths[k]));
    paths = std::move(rest);
  }
  detail::canonical_orientation(paths);
  part.paths = std::move(paths);
  out.excluded = detail::to_list(b.excluded);
  part.excluded = out.excluded;
  out.used_branches = !part.branches.empty();

  std::vector<Vertex> n_rest;
  for (Vertex v : n_set)
    if (!b.excluded[v]) n_rest.push_back(v);
  auto verdict = validate_partition(h, part, n_rest);
  if (!verdict.ok) {
    out.failure = std::string(to_string(kind)) + " partition invalid: " + verdict.reason;
    return out;
  }
  out.partition = std::move(part);
  return out;
}

}  // namespace treembed

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/decomposition.hpp"
#include "treembed/graph.hpp"
#include "treembed/ratio.hpp"

namespace treembed {

using Rng = std::mt19937_64;

enum class HostKind { random_min_degree_universal, gamma_special, tripartite_structured, disjoint_cliques, regular };

struct HostProfile {
  HostKind kind = HostKind::random_min_degree_universal;
  // Probability of each optional edge (random kinds) or inside-part density (special kinds).
  double edge_prob = 2.0 / 3.0;
  Ratio gamma{1, 10};
  int clique_size = 0;
  int copies = 0;
  bool universal = true;
  int degree = 0;
  // tripartite-structured: fraction of the non-H1..H3 vertices sent to H5 (at most 1/3).
  double h5_share = 1.0 / 3.0;
  // tripartite-structured: fraction of cross pairs among H1..H3 that are removed.
  double missing_cross = 0.005;
};

struct GeneratedHost {
  Graph graph;
  // gamma-special: X1, X2, X3. tripartite-structured: H1..H5 followed by {w}.
  std::vector<std::vector<Vertex>> parts;
};

enum class TreeProfile { uniform, caterpillar, broom, bad_heavy };

namespace detail {

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// Raise every degree to at least `target` by adding edges to random non-neighbours.
inline void lift_min_degree(Graph& g, int target, Rng& rng) {
  const int n = g.vertex_count();
  std::vector<Vertex> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (Vertex v = 0; v < n; ++v) {
    if (g.degree(v) >= target) continue;
    std::shuffle(order.begin(), order.end(), rng);
    for (Vertex u : order) {
      if (g.degree(v) >= target) break;
      if (u != v && !g.has_edge(u, v)) g.add_edge(u, v);
    }
  }
}

inline GeneratedHost random_min_degree_universal(int m, const HostProfile& pr, Rng& rng) {
  const int n = m + 1;
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (coin(rng, pr.edge_prob)) g.add_edge(u, v);
  const Vertex w = uniform_int(rng, 0, n - 1);
  for (Vertex v = 0; v < n; ++v)
    if (v != w) g.add_edge(w, v);
  lift_min_degree(g, (2 * m) / 3, rng);
  return {std::move(g), {}};
}

inline std::vector<std::vector<Vertex>> random_split(int n, std::vector<int> sizes, Rng& rng) {
  std::vector<Vertex> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<Vertex>> parts;
  std::size_t at = 0;
  for (int s : sizes) {
    std::vector<Vertex> part(perm.begin() + static_cast<std::ptrdiff_t>(at),
                             perm.begin() + static_cast<std::ptrdiff_t>(at + static_cast<std::size_t>(s)));
    std::sort(part.begin(), part.end());
    parts.push_back(std::move(part));
    at += static_cast<std::size_t>(s);
  }
  return parts;
}

inline GeneratedHost gamma_special(int m, const HostProfile& pr, Rng& rng) {
  const int n = m + 1;
  const int third = n / 3;
  std::vector<int> sizes{third, third, n - 2 * third};
  auto parts = random_split(n, sizes, rng);
  std::vector<int> part_of(static_cast<std::size_t>(n));
  for (int i = 0; i < 3; ++i)
    for (Vertex v : parts[static_cast<std::size_t>(i)]) part_of[v] = i;
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) {
      const int a = std::min(part_of[u], part_of[v]);
      const int b = std::max(part_of[u], part_of[v]);
      if (a == 0 && b == 1) continue;
      if (coin(rng, pr.edge_prob)) g.add_edge(u, v);
    }
  return {std::move(g), std::move(parts)};
}

inline GeneratedHost disjoint_cliques(int m, const HostProfile& pr) {
  int size = pr.clique_size;
  int copies = pr.copies;
  if (size <= 0 || copies <= 0) {
    copies = 2;
    size = (m + 2) / 2;
  }
  Graph g(size * copies);
  for (int c = 0; c < copies; ++c)
    for (int i = 0; i < size; ++i)
      for (int j = i + 1; j < size; ++j) g.add_edge(c * size + i, c * size + j);
  return {std::move(g), {}};
}

inline GeneratedHost regular(int m, const HostProfile& pr, Rng& rng) {
  const int n = m + 1;
  const int d = pr.degree > 0 ? pr.degree : m - 1;
  if (d >= n) throw std::invalid_argument("regular degree must be below the vertex count");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    throw std::invalid_argument("no " + std::to_string(d) + "-regular graph on " +
                                std::to_string(n) + " vertices: n*d is odd");
  std::vector<Vertex> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  std::shuffle(label.begin(), label.end(), rng);
  Graph g(n);
  for (Vertex v = 0; v < n; ++v) {
    for (int k = 1; k <= d / 2; ++k) g.add_edge(label[v], label[(v + k) % n]);
    if (d % 2 == 1) g.add_edge(label[v], label[(v + n / 2) % n]);
  }
  return {std::move(g), {}};
}

// H1, H2, H3 of equal size with near-complete cross adjacency, H4 and H5 taking
// the rest with |H5| <= |H4|/2, and a universal vertex w.
inline GeneratedHost tripartite_structured(int m, const HostProfile& pr, Rng& rng) {
  const int n = m + 1;
  const int big = (33 * m + 99) / 100;
  if (3 * big + 1 > n) throw std::invalid_argument("m too small for three parts of size 33m/100");
  const int rest = n - 1 - 3 * big;
  int h5 = static_cast<int>(rest * std::clamp(pr.h5_share, 0.0, 1.0 / 3.0));
  const int h4 = rest - h5;
  if (2 * h5 > h4) h5 = h4 / 2;
  auto parts = random_split(n, {big, big, big, h4, rest - h4, 1}, rng);
  std::vector<int> part_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (Vertex v : parts[i]) part_of[v] = static_cast<int>(i);
  const Vertex w = parts[5][0];
  Graph g(n);
  auto& H = parts;
  // Cross pairs among H1..H3: keep all but a small random share, capped per vertex.
  const int cap = std::max(0, big / 100 - 1);
  std::vector<int> missing(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (Vertex u : H[a])
        for (Vertex v : H[b]) {
          bool drop = coin(rng, pr.missing_cross) && missing[u] < cap && missing[v] < cap;
          if (drop) {
            ++missing[u];
            ++missing[v];
          } else {
            g.add_edge(u, v);
          }
        }
  // Inside each part: sparse random edges.
  for (int a = 0; a < 5; ++a)
    for (std::size_t i = 0; i < H[a].size(); ++i)
      for (std::size_t j = i + 1; j < H[a].size(); ++j)
        if (coin(rng, pr.edge_prob * 0.1)) g.add_edge(H[a][i], H[a][j]);
  // H4 sees H2 and H5 sees H3 with density at least one half; plus random extras.
  auto attach = [&](int small, int target) {
    for (Vertex x : H[small]) {
      std::vector<Vertex> pool = H[target];
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t need = (pool.size() + 1) / 2;
      for (std::size_t i = 0; i < need; ++i) g.add_edge(x, pool[i]);
    }
  };
  attach(3, 1);
  attach(4, 2);
  for (Vertex v = 0; v < n; ++v)
    if (v != w) g.add_edge(w, v);
  (void)part_of;
  return {std::move(g), std::move(parts)};
}

inline RootedTree tree_from_pruefer(const std::vector<int>& seq, int n) {
  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (int x : seq) ++degree[x];
  std::vector<std::pair<Vertex, Vertex>> edges;
  // Linear-time decoding with a moving pointer to the smallest leaf.
  int ptr = 0;
  while (degree[ptr] != 1) ++ptr;
  int leaf = ptr;
  for (int x : seq) {
    edges.emplace_back(leaf, x);
    if (--degree[x] == 1 && x < ptr) {
      leaf = x;
    } else {
      ++ptr;
      while (degree[ptr] != 1) ++ptr;
      leaf = ptr;
    }
  }
  edges.emplace_back(leaf, n - 1);
  return RootedTree::from_edges(n, edges, 0);
}

}  // namespace detail

inline GeneratedHost gen_host(int m, const HostProfile& profile, std::uint64_t rng_seed) {
  if (m < 2) throw std::invalid_argument("gen_host needs m >= 2");
  if (profile.edge_prob < 0.0 || profile.edge_prob > 1.0)
    throw std::invalid_argument("edge probability outside [0,1]");
  Rng rng(rng_seed);
  switch (profile.kind) {
    case HostKind::random_min_degree_universal:
      return detail::random_min_degree_universal(m, profile, rng);
    case HostKind::gamma_special:
      return detail::gamma_special(m, profile, rng);
    case HostKind::tripartite_structured:
      return detail::tripartite_structured(m, profile, rng);
    case HostKind::disjoint_cliques:
      return detail::disjoint_cliques(m, profile);
    case HostKind::regular:
      return detail::regular(m, profile, rng);
  }
  throw std::invalid_argument("unknown host kind");
}

// Uniform labelled tree on n vertices via a random Pruefer sequence, rooted at 0.
// G(n, edge_prob) with every degree lifted to at least min_degree.
inline Graph random_graph_with_min_degree(int n, double edge_prob, int min_degree, std::uint64_t rng_seed) {
  if (min_degree >= n) throw std::invalid_argument("minimum degree must be below the vertex count");
  Rng rng(rng_seed);
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (detail::coin(rng, edge_prob)) g.add_edge(u, v);
  detail::lift_min_degree(g, min_degree, rng);
  return g;
}

inline RootedTree random_labelled_tree(int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("tree needs at least one vertex");
  if (n == 1) return RootedTree({kNoVertex});
  if (n == 2) return RootedTree({kNoVertex, 0});
  std::vector<int> seq(static_cast<std::size_t>(n - 2));
  for (int& x : seq) x = detail::uniform_int(rng, 0, n - 1);
  return detail::tree_from_pruefer(seq, n);
}

// Largest beta for which a bad tree (3 vertices) is still a constant-size micro-tree.
inline constexpr Ratio kBadHeavyBeta{1, 3};

namespace detail {

inline RootedTree caterpillar(int m, Rng& rng) {
  const int n = m + 1;
  const int spine = std::max(1, uniform_int(rng, (n + 3) / 4, std::max((n + 3) / 4, n / 2)));
  std::vector<Vertex> parent(static_cast<std::size_t>(n), kNoVertex);
  for (Vertex v = 1; v < spine; ++v) parent[v] = v - 1;
  for (Vertex v = spine; v < n; ++v) parent[v] = uniform_int(rng, 0, spine - 1);
  return RootedTree(std::move(parent));
}

inline RootedTree broom(int m) {
  const int n = m + 1;
  const int handle = std::max(1, m / 2);
  std::vector<Vertex> parent(static_cast<std::size_t>(n), kNoVertex);
  for (Vertex v = 1; v <= handle; ++v) parent[v] = v - 1;
  for (Vertex v = handle + 1; v < n; ++v) parent[v] = handle;
  return RootedTree(std::move(parent));
}

// A random skeleton carrying pendant 3-vertex paths on a few hubs, or on the
// root alone when `all_on_root` is set (those always end up as bad micro-trees).
inline RootedTree bad_heavy_attempt(int m, Rng& rng, bool all_on_root) {
  const int n = m + 1;
  const int need = (33 * m + 99) / 100;
  int paths = std::min((n - 1) / 3, need + std::max(1, m / 100));
  if (paths < need) paths = need;
  const int skeleton = n - 3 * paths;
  if (skeleton < 1) throw std::invalid_argument("m too small for a bad-heavy tree");
  RootedTree base = random_labelled_tree(skeleton, rng);
  std::vector<Vertex> parent(base.parents().begin(), base.parents().end());
  parent.resize(static_cast<std::size_t>(n), kNoVertex);
  std::vector<Vertex> hubs{0};
  if (!all_on_root) {
    const int extra = std::min(skeleton - 1, uniform_int(rng, 1, 3));
    std::vector<Vertex> pool(static_cast<std::size_t>(skeleton - 1));
    std::iota(pool.begin(), pool.end(), 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    hubs.insert(hubs.end(), pool.begin(), pool.begin() + extra);
  }
  Vertex next = skeleton;
  for (int i = 0; i < paths; ++i) {
    const Vertex hub = hubs[static_cast<std::size_t>(i) % hubs.size()];
    parent[next] = hub;
    parent[next + 1] = next;
    parent[next + 2] = next + 1;
    next += 3;
  }
  return RootedTree(std::move(parent));
}

}  // namespace detail

inline RootedTree gen_tree(int m, TreeProfile profile, std::uint64_t rng_seed) {
  if (m < 1) throw std::invalid_argument("gen_tree needs m >= 1");
  Rng rng(rng_seed);
  switch (profile) {
    case TreeProfile::uniform:
      return random_labelled_tree(m + 1, rng);
    case TreeProfile::caterpillar:
      return detail::caterpillar(m, rng);
    case TreeProfile::broom:
      return detail::broom(m);
    case TreeProfile::bad_heavy: {
      const int need = (33 * m + 99) / 100;
      for (int attempt = 0; attempt < 8; ++attempt) {
        RootedTree t = detail::bad_heavy_attempt(m, rng, false);
        if (count_bad_trees(t, cut_tree(t, kBadHeavyBeta, true)) >= need) return t;
      }
      return detail::bad_heavy_attempt(m, rng, true);
    }
  }
  throw std::invalid_argument("unknown tree profile");
}

}  // namespace treembed

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "treembed/generators.hpp"
#include "treembed/graph.hpp"

namespace treembed {

// ---------------------------------------------------------------------------
// Exact containment

namespace detail {

struct ContainmentSearch {
  const Graph& g;
  const RootedTree& t;
  std::vector<Vertex> order;   // tree vertices, each after its search parent
  std::vector<Vertex> via;     // search parent of order[i]
  std::vector<Vertex> image;
  std::vector<char> used;
  std::vector<Vertex> host_by_degree;
  std::vector<std::vector<Vertex>> adj_tree;

  ContainmentSearch(const Graph& host, const RootedTree& tree)
      : g(host), t(tree), image(static_cast<std::size_t>(tree.size()), kNoVertex),
        used(static_cast<std::size_t>(host.vertex_count()), 0) {
    const int n = t.size();
    adj_tree.assign(static_cast<std::size_t>(n), {});
    for (Vertex v = 0; v < n; ++v)
      if (t.parent(v) != kNoVertex) {
        adj_tree[v].push_back(t.parent(v));
        adj_tree[t.parent(v)].push_back(v);
      }
    Vertex start = 0;
    for (Vertex v = 1; v < n; ++v)
      if (adj_tree[v].size() > adj_tree[start].size()) start = v;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<std::pair<Vertex, Vertex>> stack{{start, kNoVertex}};
    while (!stack.empty()) {
      auto [v, from] = stack.back();
      stack.pop_back();
      if (seen[v]) continue;
      seen[v] = 1;
      order.push_back(v);
      via.push_back(from);
      auto nbrs = adj_tree[v];
      // Visit high-degree neighbours first so constrained vertices are placed early.
      std::sort(nbrs.begin(), nbrs.end(), [&](Vertex a, Vertex b) { return adj_tree[a].size() < adj_tree[b].size(); });
      for (Vertex u : nbrs)
        if (!seen[u]) stack.emplace_back(u, v);
    }
    host_by_degree.resize(static_cast<std::size_t>(g.vertex_count()));
    std::iota(host_by_degree.begin(), host_by_degree.end(), 0);
    std::stable_sort(host_by_degree.begin(), host_by_degree.end(),
                     [&](Vertex a, Vertex b) { return g.degree(a) > g.degree(b); });
  }

  int free_neighbours(Vertex h) const {
    int c = 0;
    for (Vertex u : g.neighbors(h)) c += used[u] ? 0 : 1;
    return c;
  }

  bool fits(Vertex tv, Vertex h) const {
    if (used[h] || g.degree(h) < static_cast<int>(adj_tree[tv].size())) return false;
    // Unplaced tree neighbours of tv need distinct free host neighbours of h.
    int unplaced = 0;
    for (Vertex u : adj_tree[tv]) unplaced += image[u] == kNoVertex ? 1 : 0;
    return free_neighbours(h) >= unplaced;
  }

  bool search(std::size_t i) {
    if (i == order.size()) return true;
    const Vertex tv = order[i];
    const Vertex from = via[i];
    auto try_host = [&](Vertex h) {
      if (!fits(tv, h)) return false;
      // The parent's image must keep room for its other unplaced children.
      if (from != kNoVertex) {
        int parent_unplaced = 0;
        for (Vertex u : adj_tree[from]) parent_unplaced += image[u] == kNoVertex ? 1 : 0;
        if (free_neighbours(image[from]) < parent_unplaced) return false;
      }
      image[tv] = h;
      used[h] = 1;
      if (search(i + 1)) return true;
      used[h] = 0;
      image[tv] = kNoVertex;
      return false;
    };
    if (from == kNoVertex) {
      for (Vertex h : host_by_degree)
        if (try_host(h)) return true;
      return false;
    }
    std::vector<Vertex> cand;
    for (Vertex h : g.neighbors(image[from]))
      if (!used[h]) cand.push_back(h);
    std::stable_sort(cand.begin(), cand.end(), [&](Vertex a, Vertex b) { return g.degree(a) > g.degree(b); });
    for (Vertex h : cand)
      if (try_host(h)) return true;
    return false;
  }

  std::optional<Embedding> run() {
    if (t.size() > g.vertex_count()) return std::nullopt;
    if (!search(0)) return std::nullopt;
    Embedding phi(t.size());
    for (Vertex v = 0; v < t.size(); ++v) phi.assign(v, image[v]);
    return phi;
  }
};

}  // namespace detail

// Complete backtracking search for a copy of t in g.
inline std::optional<Embedding> tree_contains(const Graph& g, const RootedTree& t) {
  return detail::ContainmentSearch(g, t).run();
}

// Reference check: every injective map from tree vertices to host vertices.
inline bool naive_contains(const Graph& g, const RootedTree& t) {
  const int n = g.vertex_count();
  const int k = t.size();
  if (k > n) return false;
  std::vector<Vertex> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (Vertex v = 0; v < k && ok; ++v)
      if (t.parent(v) != kNoVertex) ok = g.has_edge(perm[v], perm[t.parent(v)]);
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// ---------------------------------------------------------------------------
// Trees up to isomorphism

namespace detail {

inline std::vector<std::vector<Vertex>> tree_adjacency(const RootedTree& t) {
  std::vector<std::vector<Vertex>> adj(static_cast<std::size_t>(t.size()));
  for (Vertex v = 0; v < t.size(); ++v)
    if (t.parent(v) != kNoVertex) {
      adj[v].push_back(t.parent(v));
      adj[t.parent(v)].push_back(v);
    }
  return adj;
}

inline std::string rooted_code(const std::vector<std::vector<Vertex>>& adj, Vertex v, Vertex from) {
  std::vector<std::string> parts;
  for (Vertex u : adj[v])
    if (u != from) parts.push_back(rooted_code(adj, u, v));
  std::sort(parts.begin(), parts.end());
  std::string out = "(";
  for (const auto& p : parts) out += p;
  return out + ")";
}

inline std::vector<Vertex> centroids(const std::vector<std::vector<Vertex>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<Vertex> order, parent(static_cast<std::size_t>(n), kNoVertex);
  std::vector<Vertex> stack{0};
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  seen[0] = 1;
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (Vertex u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        parent[u] = v;
        stack.push_back(u);
      }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (parent[*it] != kNoVertex) size[parent[*it]] += size[*it];
  std::vector<Vertex> out;
  for (Vertex v = 0; v < n; ++v) {
    int heaviest = n - size[v];
    for (Vertex u : adj[v])
      if (u != parent[v]) heaviest = std::max(heaviest, size[u]);
    if (2 * heaviest <= n) out.push_back(v);
  }
  return out;
}

}  // namespace detail

// Canonical code of the unrooted tree: rooted at a centroid, least code over both centroids.
inline std::string canonical_tree_code(const RootedTree& t) {
  const auto adj = detail::tree_adjacency(t);
  std::string best;
  for (Vertex c : detail::centroids(adj)) {
    auto code = detail::rooted_code(adj, c, kNoVertex);
    if (best.empty() || code < best) best = std::move(code);
  }
  return best;
}

// One tree per isomorphism class with m edges, grown by adding leaves.
inline std::vector<RootedTree> enumerate_trees(int m) {
  if (m < 0) return {};
  std::vector<RootedTree> level{RootedTree({kNoVertex})};
  for (int k = 1; k <= m; ++k) {
    std::set<std::string> seen;
    std::vector<RootedTree> next;
    for (const auto& t : level)
      for (Vertex v = 0; v < t.size(); ++v) {
        std::vector<Vertex> parent(t.parents().begin(), t.parents().end());
        parent.push_back(v);
        RootedTree grown(std::move(parent));
        if (seen.insert(canonical_tree_code(grown)).second) next.push_back(std::move(grown));
      }
    level = std::move(next);
  }
  return level;
}

// ---------------------------------------------------------------------------
// Host classes: a universal vertex plus every graph on the other m vertices

namespace detail {

using SmallAdj = std::vector<std::uint32_t>;

// Canonical form by colour refinement, then every labelling that respects the
// refined cells; the least adjacency string wins.
inline std::uint64_t canonical_small(const SmallAdj& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> colour(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) colour[v] = std::popcount(adj[v]);
  for (int round = 0; round < n; ++round) {
    std::vector<std::pair<int, std::vector<int>>> sig(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      sig[v].first = colour[v];
      for (int u = 0; u < n; ++u)
        if (adj[v] >> u & 1u) sig[v].second.push_back(colour[u]);
      std::sort(sig[v].second.begin(), sig[v].second.end());
    }
    auto sorted = sig;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> next(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
      next[v] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin());
    const bool stable = std::set<int>(next.begin(), next.end()).size() == std::set<int>(colour.begin(), colour.end()).size();
    colour = std::move(next);
    if (stable) break;
  }
  // Vertices sorted by colour; permute only within equal colours.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return colour[a] < colour[b]; });
  std::vector<std::pair<int, int>> cells;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && colour[order[j]] == colour[order[i]]) ++j;
    cells.emplace_back(i, j);
    i = j;
  }
  std::uint64_t best = ~0ULL;
  std::function<void(std::size_t)> walk = [&](std::size_t c) {
    if (c == cells.size()) {
      std::uint64_t code = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) code = (code << 1) | (adj[order[i]] >> order[j] & 1u);
      best = std::min(best, code);
      return;
    }
    auto first = order.begin() + cells[c].first;
    auto last = order.begin() + cells[c].second;
    std::sort(first, last);
    do {
      walk(c + 1);
    } while (std::next_permutation(first, last));
  };
  walk(0);
  return best;
}

// All graphs on n vertices up to isomorphism, by vertex augmentation.
inline std::vector<SmallAdj> graph_classes(int n) {
  std::vector<SmallAdj> level{SmallAdj{}};
  for (int k = 1; k <= n; ++k) {
    std::set<std::uint64_t> seen;
    std::vector<SmallAdj> next;
    for (const auto& g : level)
      for (std::uint32_t mask = 0; mask < (1u << (k - 1)); ++mask) {
        SmallAdj h = g;
        h.push_back(mask);
        for (int u = 0; u < k - 1; ++u)
          if (mask >> u & 1u) h[u] |= 1u << (k - 1);
        if (seen.insert(canonical_small(h)).second) next.push_back(std::move(h));
      }
    level = std::move(next);
  }
  return level;
}

}  // namespace detail

enum class ScanMode { exhaustive, random };

inline std::string to_string(ScanMode m) { return m == ScanMode::exhaustive ? "exhaustive" : "random"; }

// Hosts on m+1 vertices with a universal vertex and minimum degree floor(2m/3).
// Exhaustive mode lists every isomorphism class (m <= 7); random mode draws `count` samples.
inline std::vector<Graph> enumerate_hosts(int m, ScanMode mode, int count = 0, std::uint64_t seed = 0) {
  std::vector<Graph> out;
  if (m < 1) return out;
  const int min_degree = (2 * m) / 3;
  if (mode == ScanMode::random) {
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
      HostProfile hp;
      hp.edge_prob = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
      out.push_back(gen_host(m, hp, rng()).graph);
    }
    return out;
  }
  if (m > 7) throw std::invalid_argument("exhaustive host enumeration is limited to m <= 7");
  for (const auto& rest : detail::graph_classes(m)) {
    // The universal vertex adds one to every degree.
    bool ok = true;
    for (auto row : rest) ok = ok && std::popcount(row) + 1 >= min_degree;
    if (!ok) continue;
    Graph g(m + 1);
    for (Vertex u = 0; u < m; ++u) {
      g.add_edge(u, m);
      for (Vertex v = u + 1; v < m; ++v)
        if (rest[u] >> v & 1u) g.add_edge(u, v);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scans

struct ScanFailure {
  int m = 0;
  std::string tree;  // canonical code
  std::vector<std::pair<Vertex, Vertex>> host_edges;
  std::string reason;
};

struct ScanReport {
  int m_lo = 0;
  int m_hi = -1;
  long long trees_tested = 0;
  long long hosts_tested = 0;
  long long pairs_tested = 0;
  std::vector<ScanFailure> failures;
  ScanMode mode = ScanMode::exhaustive;
  double elapsed_seconds = 0;

  bool ok() const { return failures.empty(); }
};

struct ScanOptions {
  ScanMode mode = ScanMode::exhaustive;
  long long budget = 10000;  // random mode: total pairs over the range
  std::uint64_t seed = 1;
  int threads = 1;
  // Called once per tested pair (for streaming output); must be thread-safe.
  std::function<void(int m, const RootedTree&, const Graph&, bool contained)> on_pair;
};

namespace detail {

inline std::vector<std::pair<Vertex, Vertex>> edge_list(const Graph& g) {
  std::vector<std::pair<Vertex, Vertex>> out;
  for (Vertex u = 0; u < g.vertex_count(); ++u)
    for (Vertex v : g.neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

// Runs fn(i) for i in [0, count) over a pool pulling indices from a shared counter.
inline void parallel_for(long long count, int threads, const std::function<void(long long)>& fn) {
  std::atomic<long long> next{0};
  auto worker = [&] {
    for (long long i = next++; i < count; i = next++) fn(i);
  };
  const int extra = std::max(0, std::min<int>(threads, static_cast<int>(std::min<long long>(count, 1 << 20))) - 1);
  std::vector<std::thread> pool;
  for (int i = 0; i < extra; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Every tree with m edges must embed in every host of the class; failures are
// counterexamples and are reported, never filtered.
inline ScanReport conjecture_scan(int m_lo, int m_hi, const ScanOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  ScanReport report;
  report.m_lo = m_lo;
  report.m_hi = m_hi;
  report.mode = opt.mode;
  if (m_lo > m_hi) return report;
  std::mutex lock;
  auto record = [&](int m, const RootedTree& t, const Graph& g) {
    bool contained = false;
    if (auto phi = tree_contains(g, t)) contained = static_cast<bool>(verify_embedding(g, t, *phi, true));
    if (opt.on_pair) opt.on_pair(m, t, g, contained);
    if (contained) return;
    std::lock_guard guard(lock);
    report.failures.push_back({m, canonical_tree_code(t), detail::edge_list(g), "no embedding found"});
  };
  if (opt.mode == ScanMode::exhaustive) {
    for (int m = std::max(1, m_lo); m <= m_hi; ++m) {
      const auto trees = enumerate_trees(m);
      const auto hosts = enumerate_hosts(m, ScanMode::exhaustive);
      report.trees_tested += static_cast<long long>(trees.size());
      report.hosts_tested += static_cast<long long>(hosts.size());
      const long long pairs = static_cast<long long>(trees.size() * hosts.size());
      detail::parallel_for(pairs, opt.threads, [&](long long i) {
        record(m, trees[static_cast<std::size_t>(i) % trees.size()], hosts[static_cast<std::size_t>(i) / trees.size()]);
      });
      report.pairs_tested += pairs;
    }
  } else {
    const int span = m_hi - std::max(1, m_lo) + 1;
    if (span > 0 && opt.budget > 0) {
      // Pair i uses its own seed so results do not depend on the thread count.
      detail::parallel_for(opt.budget, opt.threads, [&](long long i) {
        Rng rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(i));
        const int m = std::max(1, m_lo) + static_cast<int>(i % span);
        const RootedTree t = random_labelled_tree(m + 1, rng);
        HostProfile hp;
        hp.edge_prob = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
        const Graph g = gen_host(m, hp, rng()).graph;
        record(m, t, g);
      });
      report.trees_tested = report.hosts_tested = report.pairs_tested = opt.budget;
    }
  }
  std::sort(report.failures.begin(), report.failures.end(), [](const ScanFailure& a, const ScanFailure& b) {
    return std::tie(a.m, a.tree, a.host_edges) < std::tie(b.m, b.tree, b.host_edges);
  });
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace treembed

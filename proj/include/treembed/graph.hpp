#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace treembed {

using Vertex = int;
inline constexpr Vertex kNoVertex = -1;

// Simple undirected graph on vertices 0..n-1. Keeps adjacency lists for
// iteration and a bit matrix for constant-time edge queries.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n)
      : adj_(static_cast<std::size_t>(n)),
        words_((static_cast<std::size_t>(n) + 63) / 64),
        bits_(static_cast<std::size_t>(n) * words_, 0) {
    if (n < 0) throw std::invalid_argument("negative vertex count");
  }

  int vertex_count() const { return static_cast<int>(adj_.size()); }
  std::size_t edge_count() const { return edges_; }

  // Returns false when the edge was already present.
  bool add_edge(Vertex u, Vertex v) {
    check(u);
    check(v);
    if (u == v) throw std::invalid_argument("self-loop at vertex " + std::to_string(u));
    if (has_edge(u, v)) return false;
    set_bit(u, v);
    set_bit(v, u);
    adj_[u].push_back(v);
    adj_[v].push_back(u);
    ++edges_;
    return true;
  }

  bool has_edge(Vertex u, Vertex v) const {
    const auto w = static_cast<std::size_t>(v) >> 6;
    return (bits_[static_cast<std::size_t>(u) * words_ + w] >> (v & 63)) & 1U;
  }

  std::span<const Vertex> neighbors(Vertex v) const { return adj_[v]; }
  int degree(Vertex v) const { return static_cast<int>(adj_[v].size()); }

  // Bit row of v: word i holds adjacency to vertices 64i..64i+63.
  std::span<const std::uint64_t> row(Vertex v) const {
    return {bits_.data() + static_cast<std::size_t>(v) * words_, words_};
  }

  std::vector<std::pair<Vertex, Vertex>> edge_list() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    out.reserve(edges_);
    for (Vertex u = 0; u < vertex_count(); ++u)
      for (Vertex v : adj_[u])
        if (u < v) out.emplace_back(u, v);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Subgraph induced by `vs`; vertex i of the result is vs[i].
  Graph induced(std::span<const Vertex> vs) const {
    Graph h(static_cast<int>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j)
        if (has_edge(vs[i], vs[j])) h.add_edge(static_cast<Vertex>(i), static_cast<Vertex>(j));
    return h;
  }

  int degree_into(Vertex v, std::span<const Vertex> set) const {
    int d = 0;
    for (Vertex u : set) d += has_edge(v, u) ? 1 : 0;
    return d;
  }

 private:
  void check(Vertex v) const {
    if (v < 0 || v >= vertex_count())
      throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
  }
  void set_bit(Vertex u, Vertex v) {
    bits_[static_cast<std::size_t>(u) * words_ + (static_cast<std::size_t>(v) >> 6)] |=
        std::uint64_t{1} << (v & 63);
  }

  std::vector<std::vector<Vertex>> adj_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::size_t edges_ = 0;
};

inline int min_degree(const Graph& g) {
  if (g.vertex_count() == 0) return 0;
  int d = g.degree(0);
  for (Vertex v = 1; v < g.vertex_count(); ++v) d = std::min(d, g.degree(v));
  return d;
}

inline std::vector<Vertex> universal_vertices(const Graph& g) {
  std::vector<Vertex> out;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (g.degree(v) == g.vertex_count() - 1) out.push_back(v);
  return out;
}

inline Graph complete_graph(int n) {
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) g.add_edge(u, v);
  return g;
}

inline Graph cycle_graph(int n) {
  Graph g(n);
  for (Vertex v = 0; v < n; ++v) g.add_edge(v, (v + 1) % n);
  return g;
}

// Rooted tree stored as a parent array; the root's parent is kNoVertex.
class RootedTree {
 public:
  RootedTree() = default;

  explicit RootedTree(std::vector<Vertex> parent) : parent_(std::move(parent)) {
    const int n = size();
    if (n == 0) throw std::invalid_argument("tree must have at least one vertex");
    children_.assign(static_cast<std::size_t>(n), {});
    for (Vertex v = 0; v < n; ++v) {
      const Vertex p = parent_[v];
      if (p == kNoVertex) {
        if (root_ != kNoVertex) throw std::invalid_argument("tree has more than one root");
        root_ = v;
      } else {
        if (p < 0 || p >= n || p == v)
          throw std::invalid_argument("invalid parent of vertex " + std::to_string(v));
        children_[p].push_back(v);
      }
    }
    if (root_ == kNoVertex) throw std::invalid_argument("tree has no root");
    build_traversal();
    if (static_cast<int>(preorder_.size()) != n)
      throw std::invalid_argument("parent relation is cyclic or disconnected");
  }

  // Builds the tree on n vertices from an undirected edge list, rooted at `root`.
  static RootedTree from_edges(int n, std::span<const std::pair<Vertex, Vertex>> edges,
                               Vertex root) {
    if (n <= 0 || root < 0 || root >= n) throw std::invalid_argument("bad tree size or root");
    if (static_cast<int>(edges.size()) != n - 1)
      throw std::invalid_argument("a tree on n vertices has n-1 edges");
    std::vector<std::vector<Vertex>> adj(static_cast<std::size_t>(n));
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n || u == v)
        throw std::invalid_argument("bad tree edge");
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    std::vector<Vertex> parent(static_cast<std::size_t>(n), kNoVertex);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Vertex> stack{root};
    seen[root] = 1;
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      for (Vertex v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          parent[v] = u;
          stack.push_back(v);
        }
    }
    if (std::count(seen.begin(), seen.end(), 1) != n)
      throw std::invalid_argument("edge list is not connected");
    return RootedTree(std::move(parent));
  }

  int size() const { return static_cast<int>(parent_.size()); }
  int edge_count() const { return size() - 1; }
  Vertex root() const { return root_; }
  Vertex parent(Vertex v) const { return parent_[v]; }
  const std::vector<Vertex>& parents() const { return parent_; }
  std::span<const Vertex> children(Vertex v) const { return children_[v]; }
  int depth(Vertex v) const { return depth_[v]; }
  // 0 for the root's colour class, 1 for the other.
  int side(Vertex v) const { return depth_[v] & 1; }
  int subtree_size(Vertex v) const { return subtree_[v]; }
  // Preorder from the root, children visited in increasing id order.
  const std::vector<Vertex>& preorder() const { return preorder_; }
  int degree(Vertex v) const {
    return static_cast<int>(children_[v].size()) + (parent_[v] == kNoVertex ? 0 : 1);
  }
  bool is_leaf(Vertex v) const { return degree(v) == 1; }

  std::vector<std::pair<Vertex, Vertex>> edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    for (Vertex v = 0; v < size(); ++v)
      if (parent_[v] != kNoVertex) out.emplace_back(parent_[v], v);
    return out;
  }

  Graph as_graph() const {
    Graph g(size());
    for (auto [u, v] : edges()) g.add_edge(u, v);
    return g;
  }

  RootedTree rerooted(Vertex r) const {
    auto e = edges();
    return from_edges(size(), e, r);
  }

 private:
  void build_traversal() {
    const auto n = static_cast<std::size_t>(size());
    for (auto& c : children_) std::sort(c.begin(), c.end());
    depth_.assign(n, 0);
    subtree_.assign(n, 1);
    preorder_.clear();
    preorder_.reserve(n);
    std::vector<Vertex> stack{root_};
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      preorder_.push_back(u);
      if (preorder_.size() > n) return;
      for (auto it = children_[u].rbegin(); it != children_[u].rend(); ++it) {
        depth_[*it] = depth_[u] + 1;
        stack.push_back(*it);
      }
    }
    for (auto it = preorder_.rbegin(); it != preorder_.rend(); ++it)
      if (parent_[*it] != kNoVertex) subtree_[parent_[*it]] += subtree_[*it];
  }

  std::vector<Vertex> parent_;
  std::vector<std::vector<Vertex>> children_;
  std::vector<int> depth_;
  std::vector<int> subtree_;
  std::vector<Vertex> preorder_;
  Vertex root_ = kNoVertex;
};

// Partial injective map from tree vertices to host vertices.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(int tree_size) : image_(static_cast<std::size_t>(tree_size), kNoVertex) {}

  int domain_size() const { return static_cast<int>(image_.size()); }
  bool contains(Vertex t) const { return image_[t] != kNoVertex; }
  Vertex operator[](Vertex t) const { return image_[t]; }
  void assign(Vertex t, Vertex host) { image_[t] = host; }
  void unassign(Vertex t) { image_[t] = kNoVertex; }
  const std::vector<Vertex>& images() const { return image_; }
  int mapped_count() const {
    return static_cast<int>(std::count_if(image_.begin(), image_.end(),
                                          [](Vertex h) { return h != kNoVertex; }));
  }

 private:
  std::vector<Vertex> image_;
};

struct Verdict {
  bool ok = true;
  std::string reason;
  // The first offending pair of tree vertices (or tree vertex and kNoVertex).
  Vertex first = kNoVertex;
  Vertex second = kNoVertex;

  explicit operator bool() const { return ok; }
  static Verdict pass() { return {}; }
  static Verdict fail(std::string why, Vertex a = kNoVertex, Vertex b = kNoVertex) {
    return {false, std::move(why), a, b};
  }
};

inline Verdict verify_embedding(const Graph& g, const RootedTree& t, const Embedding& phi,
                                bool require_total) {
  if (phi.domain_size() != t.size())
    return Verdict::fail("embedding domain size " + std::to_string(phi.domain_size()) +
                         " differs from tree size " + std::to_string(t.size()));
  std::vector<Vertex> owner(static_cast<std::size_t>(g.vertex_count()), kNoVertex);
  for (Vertex v = 0; v < t.size(); ++v) {
    const Vertex h = phi[v];
    if (h == kNoVertex) {
      if (require_total) return Verdict::fail("tree vertex " + std::to_string(v) + " unmapped", v);
      continue;
    }
    if (h < 0 || h >= g.vertex_count())
      return Verdict::fail("tree vertex " + std::to_string(v) + " maps outside the host", v);
    if (owner[h] != kNoVertex)
      return Verdict::fail("non-injective: tree vertices " + std::to_string(owner[h]) + " and " +
                               std::to_string(v) + " share host vertex " + std::to_string(h),
                           owner[h], v);
    owner[h] = v;
  }
  for (Vertex v = 0; v < t.size(); ++v) {
    const Vertex p = t.parent(v);
    if (p == kNoVertex || !phi.contains(v) || !phi.contains(p)) continue;
    if (!g.has_edge(phi[p], phi[v]))
      return Verdict::fail("tree edge " + std::to_string(p) + "-" + std::to_string(v) +
                               " maps to non-edge " + std::to_string(phi[p]) + "-" +
                               std::to_string(phi[v]),
                           p, v);
  }
  return Verdict::pass();
}

}  // namespace treembed

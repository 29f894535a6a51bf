#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/graph.hpp"
#include "treembed/ratio.hpp"

namespace treembed {

enum class Category { Bal, NearBal, Unbal };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::Bal: return "Bal";
    case Category::NearBal: return "NearBal";
    case Category::Unbal: return "Unbal";
  }
  return "?";
}

struct TreeType {
  int t = 0;
  int t1 = 0;  // class containing the root
  int t2 = 0;
  Category category = Category::Bal;
  bool is_bad = false;

  friend bool operator==(const TreeType&, const TreeType&) = default;
};

inline TreeType make_type(int t1, int t2) {
  TreeType tt{t1 + t2, t1, t2, Category::Unbal, false};
  if (t1 == t2) tt.category = Category::Bal;
  else if (t1 == t2 + 1) tt.category = Category::NearBal;
  tt.is_bad = tt.t == 3 && t1 == 2;
  return tt;
}

// Type of a stand-alone rooted micro-tree.
inline TreeType classify(const RootedTree& micro) {
  int t1 = 0;
  for (Vertex v = 0; v < micro.size(); ++v) t1 += micro.side(v) == 0 ? 1 : 0;
  return make_type(t1, micro.size() - t1);
}

// Type of the connected vertex set `vertices` of t, rooted at `root`.
inline TreeType classify(const RootedTree& t, std::span<const Vertex> vertices, Vertex root) {
  int t1 = 0;
  for (Vertex v : vertices) t1 += t.side(v) == t.side(root) ? 1 : 0;
  return make_type(t1, static_cast<int>(vertices.size()) - t1);
}

inline bool is_bad_tree(const RootedTree& micro) { return classify(micro).is_bad; }

struct MicroTree {
  std::vector<Vertex> vertices;  // sorted
  Vertex root = kNoVertex;       // the vertex whose parent is a seed
  Vertex parent_seed = kNoVertex;
  // Two-seeded trees only: the second seed and its neighbour inside the tree.
  Vertex second_seed = kNoVertex;
  Vertex connector = kNoVertex;

  int size() const { return static_cast<int>(vertices.size()); }
  bool two_seeded() const { return second_seed != kNoVertex; }
};

struct TreeDecomposition {
  Ratio beta;
  int m = 0;
  bool relaxed = false;
  std::vector<Vertex> seeds;  // W, sorted
  std::vector<MicroTree> L, F1, F2;
  std::vector<Vertex> connectors;  // V-tilde, sorted
  // Provenance of seeds and anomalies seen while cutting.
  std::vector<Vertex> first_pass;
  std::vector<Vertex> separators;
  std::vector<Vertex> absorbed;
  int doubly_attached_singletons = 0;

  std::vector<const MicroTree*> f2_prime() const {
    std::vector<const MicroTree*> out;
    for (const auto& mt : F2)
      if (mt.two_seeded()) out.push_back(&mt);
    return out;
  }
  bool is_seed(Vertex v) const { return std::binary_search(seeds.begin(), seeds.end(), v); }
  long long f1_volume() const {
    long long s = 0;
    for (const auto& mt : F1) s += mt.size();
    return s;
  }
  long long f2_volume() const {
    long long s = 0;
    for (const auto& mt : F2) s += mt.size();
    return s;
  }
};

namespace detail {

// Components of t minus the marked vertices, as sorted vertex lists.
inline std::vector<std::vector<Vertex>> components_without(const RootedTree& t,
                                                          const std::vector<char>& removed) {
  const int n = t.size();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Vertex>> out;
  for (Vertex v : t.preorder()) {
    if (removed[v]) continue;
    const Vertex p = t.parent(v);
    if (p != kNoVertex && !removed[p]) {
      comp[v] = comp[p];
    } else {
      comp[v] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(comp[v])].push_back(v);
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  return out;
}

// Seeds adjacent to a component.
inline std::vector<Vertex> seed_neighbours(const RootedTree& t, const std::vector<Vertex>& comp,
                                           const std::vector<char>& seed) {
  std::vector<Vertex> out;
  for (Vertex v : comp) {
    const Vertex p = t.parent(v);
    if (p != kNoVertex && seed[p]) out.push_back(p);
    for (Vertex c : t.children(v))
      if (seed[c]) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Vertices of `comp` with degree >= 3 in the smallest subtree of
// T[comp + seeds] spanning the adjacent seeds.
inline std::vector<Vertex> steiner_branch_vertices(const RootedTree& t,
                                                   const std::vector<Vertex>& comp,
                                                   const std::vector<char>& seed) {
  // Repeatedly prune non-seed leaves; what remains is the Steiner tree.
  std::vector<Vertex> local = comp;
  auto in_comp = [&](Vertex v) { return std::binary_search(local.begin(), local.end(), v); };
  std::vector<int> deg;
  deg.reserve(local.size());
  auto index = [&](Vertex v) {
    return static_cast<std::size_t>(std::lower_bound(local.begin(), local.end(), v) - local.begin());
  };
  auto neighbours = [&](Vertex v) {
    std::vector<Vertex> nb;
    const Vertex p = t.parent(v);
    if (p != kNoVertex && (seed[p] || in_comp(p))) nb.push_back(p);
    for (Vertex c : t.children(v))
      if (seed[c] || in_comp(c)) nb.push_back(c);
    return nb;
  };
  for (Vertex v : local) deg.push_back(static_cast<int>(neighbours(v).size()));
  std::vector<char> pruned(local.size(), 0);
  std::vector<Vertex> queue;
  for (std::size_t i = 0; i < local.size(); ++i)
    if (deg[i] <= 1) queue.push_back(local[i]);
  while (!queue.empty()) {
    Vertex v = queue.back();
    queue.pop_back();
    const auto i = index(v);
    if (pruned[i]) continue;
    pruned[i] = 1;
    for (Vertex u : neighbours(v)) {
      if (seed[u]) continue;
      const auto j = index(u);
      if (!pruned[j] && --deg[j] <= 1) queue.push_back(u);
    }
  }
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < local.size(); ++i)
    if (!pruned[i] && deg[i] >= 3) out.push_back(local[i]);
  return out;
}

}  // namespace detail

inline TreeDecomposition cut_tree(const RootedTree& t, Ratio beta, bool relax_f2_upper = false) {
  if (beta <= Ratio{0, 1} || beta > Ratio{1, 1})
    throw std::invalid_argument("beta must lie in (0, 1]");
  const int n = t.size();
  const int m = n - 1;
  if (m < 1) throw std::invalid_argument("tree needs at least one edge");
  auto exceeds_beta_m = [&](long long size) { return !at_most(size, beta, m); };

  TreeDecomposition d;
  d.beta = beta;
  d.m = m;
  d.relaxed = relax_f2_upper;

  // First pass: repeatedly cut the deepest vertex whose remaining subtree is
  // larger than beta*m, together with that subtree, until the root is cut.
  std::vector<Vertex> order(t.preorder().begin(), t.preorder().end());
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) {
    if (t.depth(a) != t.depth(b)) return t.depth(a) > t.depth(b);
    return a < b;
  });
  std::vector<long long> rem(static_cast<std::size_t>(n));
  for (Vertex v = 0; v < n; ++v) rem[v] = t.subtree_size(v);
  std::vector<char> gone(static_cast<std::size_t>(n), 0);
  std::vector<char> seed(static_cast<std::size_t>(n), 0);
  for (Vertex v : order) {
    if (gone[v] || v == t.root()) continue;
    if (!exceeds_beta_m(rem[v])) continue;
    seed[v] = 1;
    d.first_pass.push_back(v);
    std::vector<Vertex> stack{v};
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      gone[u] = 1;
      for (Vertex c : t.children(u))
        if (!gone[c]) stack.push_back(c);
    }
    for (Vertex a = t.parent(v); a != kNoVertex; a = t.parent(a)) rem[a] -= rem[v];
  }
  seed[t.root()] = 1;
  d.first_pass.push_back(t.root());

  // Second pass: split components touching more than two seeds.
  for (const auto& comp : detail::components_without(t, seed)) {
    if (detail::seed_neighbours(t, comp, seed).size() <= 2) continue;
    for (Vertex b : detail::steiner_branch_vertices(t, comp, seed)) d.separators.push_back(b);
  }
  for (Vertex b : d.separators) seed[b] = 1;

  // Third pass: absorb small components attached to two seeds.
  for (const auto& comp : detail::components_without(t, seed)) {
    if (detail::seed_neighbours(t, comp, seed).size() != 2) continue;
    if (static_cast<long long>(comp.size()) * beta.num() > beta.den()) continue;
    if (comp.size() == 1) ++d.doubly_attached_singletons;
    d.absorbed.insert(d.absorbed.end(), comp.begin(), comp.end());
  }
  for (Vertex v : d.absorbed) seed[v] = 1;

  for (Vertex v = 0; v < n; ++v)
    if (seed[v]) d.seeds.push_back(v);

  for (auto& comp : detail::components_without(t, seed)) {
    MicroTree mt;
    mt.root = *std::min_element(comp.begin(), comp.end(), [&](Vertex a, Vertex b) {
      return t.depth(a) < t.depth(b) || (t.depth(a) == t.depth(b) && a < b);
    });
    mt.parent_seed = t.parent(mt.root);
    for (Vertex v : comp)
      for (Vertex c : t.children(v))
        if (seed[c] && mt.second_seed == kNoVertex) {
          mt.second_seed = c;
          mt.connector = v;
        }
    mt.vertices = std::move(comp);
    const long long size = mt.size();
    if (size == 1) {
      d.L.push_back(std::move(mt));
    } else if (size * beta.num() <= beta.den()) {
      d.F1.push_back(std::move(mt));
    } else {
      if (mt.two_seeded()) {
        d.connectors.push_back(mt.root);
        d.connectors.push_back(mt.connector);
      }
      d.F2.push_back(std::move(mt));
    }
  }
  std::sort(d.connectors.begin(), d.connectors.end());
  d.connectors.erase(std::unique(d.connectors.begin(), d.connectors.end()), d.connectors.end());
  return d;
}

struct DecompositionReport {
  bool a_root_is_seed = true;
  bool b_few_seeds = true;
  bool c_seeds_have_children = true;
  bool d_leaves = true;
  bool e_tiny = true;
  bool f_small = true;
  bool g_one_neighbour = true;
  bool h_two_neighbours = true;
  bool i_connectors = true;
  bool partition = true;
  // Absorbed seeds without a child are tolerated.
  std::vector<Vertex> childless_absorbed;
  std::vector<std::string> violations;

  bool ok() const {
    return a_root_is_seed && b_few_seeds && c_seeds_have_children && d_leaves && e_tiny &&
           f_small && g_one_neighbour && h_two_neighbours && i_connectors && partition;
  }
};

inline DecompositionReport check_decomposition(const RootedTree& t, const TreeDecomposition& d) {
  DecompositionReport r;
  const int n = t.size();
  const long long m = d.m;
  const Ratio beta = d.beta;
  auto fail = [&](bool& flag, std::string msg) {
    flag = false;
    r.violations.push_back(std::move(msg));
  };
  std::vector<char> seed(static_cast<std::size_t>(n), 0);
  for (Vertex s : d.seeds) seed[s] = 1;

  if (!seed[t.root()]) fail(r.a_root_is_seed, "root is not a seed");
  // |W| <= 2/beta^2  <=>  |W| * num^2 <= 2 * den^2
  if (static_cast<__int128>(d.seeds.size()) * beta.num() * beta.num() >
      static_cast<__int128>(2) * beta.den() * beta.den())
    fail(r.b_few_seeds, std::to_string(d.seeds.size()) + " seeds exceed 2/beta^2");
  if (!at_most(1, beta, m)) {
    for (Vertex s : d.seeds) {
      if (!t.children(s).empty()) continue;
      if (std::find(d.absorbed.begin(), d.absorbed.end(), s) != d.absorbed.end()) {
        r.childless_absorbed.push_back(s);
        continue;
      }
      fail(r.c_seeds_have_children, "seed " + std::to_string(s) + " has no child");
    }
  }

  std::vector<int> cover(static_cast<std::size_t>(n), 0);
  for (Vertex s : d.seeds) ++cover[s];
  auto visit = [&](const MicroTree& mt, const char* family) {
    for (Vertex v : mt.vertices) ++cover[v];
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (Vertex v : mt.vertices) in[v] = 1;
    std::vector<Vertex> nb;
    for (Vertex v : mt.vertices) {
      const Vertex p = t.parent(v);
      if (p != kNoVertex && !in[p]) nb.push_back(p);
      for (Vertex c : t.children(v))
        if (!in[c]) nb.push_back(c);
    }
    for (Vertex u : nb)
      if (!seed[u])
        fail(r.partition, std::string(family) + " tree at " + std::to_string(mt.root) +
                              " touches non-seed " + std::to_string(u));
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    return nb.size();
  };
  for (const auto& mt : d.L) {
    if (mt.size() != 1) fail(r.d_leaves, "L tree of size " + std::to_string(mt.size()));
    if (visit(mt, "L") != 1) fail(r.g_one_neighbour, "L tree at " + std::to_string(mt.root));
  }
  for (const auto& mt : d.F1) {
    const long long s = mt.size();
    if (s <= 1 || s * beta.num() > beta.den())
      fail(r.e_tiny, "F1 tree of size " + std::to_string(s));
    if (visit(mt, "F1") != 1) fail(r.g_one_neighbour, "F1 tree at " + std::to_string(mt.root));
  }
  for (const auto& mt : d.F2) {
    const long long s = mt.size();
    if (s * beta.num() <= beta.den() || (!d.relaxed && !at_most(s, beta, m)))
      fail(r.f_small, "F2 tree of size " + std::to_string(s));
    const auto k = visit(mt, "F2");
    if (mt.two_seeded() && k != 2)
      fail(r.h_two_neighbours, "two-seeded tree at " + std::to_string(mt.root) + " has " +
                                   std::to_string(k) + " seed neighbours");
    if (!mt.two_seeded() && k != 1)
      fail(r.g_one_neighbour, "F2 tree at " + std::to_string(mt.root) + " has " +
                                  std::to_string(k) + " seed neighbours");
  }
  for (Vertex v = 0; v < n; ++v)
    if (cover[v] != 1) {
      fail(r.partition, "vertex " + std::to_string(v) + " covered " + std::to_string(cover[v]) + " times");
      break;
    }
  // |V~| < 2 beta m
  if (!less_than(static_cast<long long>(d.connectors.size()), beta * Ratio{2, 1}, m))
    fail(r.i_connectors, std::to_string(d.connectors.size()) + " connectors");
  return r;
}

inline int count_bad_trees(const RootedTree& t, const TreeDecomposition& d) {
  int bad = 0;
  for (const auto& mt : d.F1) bad += classify(t, mt.vertices, mt.root).is_bad ? 1 : 0;
  return bad;
}

// j* = ceil(log2(2 / beta^2)), clamped at 0.
inline int padding_exponent(Ratio beta) {
  int j = 0;
  while (static_cast<__int128>(std::int64_t{1} << j) * beta.num() * beta.num() <
         static_cast<__int128>(2) * beta.den() * beta.den())
    ++j;
  return j;
}

inline long long padded_seed_count(Ratio beta) { return 47LL << padding_exponent(beta); }

struct PaddedTree {
  RootedTree tree;
  TreeDecomposition decomposition;
  int original_size = 0;  // vertices >= original_size are padding seeds
};

inline PaddedTree pad_seeds(const RootedTree& t, const TreeDecomposition& d) {
  const long long target = padded_seed_count(d.beta);
  const long long have = static_cast<long long>(d.seeds.size());
  if (have > target)
    throw std::invalid_argument("decomposition already has more than 47*2^j* seeds");
  std::vector<Vertex> parent = t.parents();
  TreeDecomposition nd = d;
  for (long long i = 0; i < target - have; ++i) {
    nd.seeds.push_back(static_cast<Vertex>(parent.size()));
    parent.push_back(t.root());
  }
  return {RootedTree(std::move(parent)), std::move(nd), t.size()};
}

struct NiceSubtree {
  std::vector<Vertex> vertices;
  Vertex root = kNoVertex;
};

inline bool is_gamma_nice(const RootedTree& t, const NiceSubtree& s, Ratio gamma) {
  const int n = t.size();
  const long long m = n - 1;
  if (s.vertices.empty() || !less_than(static_cast<long long>(s.vertices.size()), gamma, m))
    return false;
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (Vertex v : s.vertices) in[v] = 1;
  if (s.root == kNoVertex || !in[s.root]) return false;
  // T* must be connected.
  int tops = 0;
  for (Vertex v : s.vertices)
    if (t.parent(v) == kNoVertex || !in[t.parent(v)]) ++tops;
  if (tops != 1) return false;
  for (const auto& comp : detail::components_without(t, in)) {
    bool touches_root = false;
    for (Vertex v : comp) {
      const Vertex p = t.parent(v);
      if (p == s.root) touches_root = true;
      for (Vertex c : t.children(v))
        if (c == s.root) touches_root = true;
    }
    if (!touches_root) return false;
  }
  return true;
}

// Tries roots by decreasing degree (ties by id). The single-vertex subtree at
// any vertex already separates T into pieces adjacent to it, so the first
// root admitted by the size bound is returned.
inline std::optional<NiceSubtree> gamma_nice_subtree(const RootedTree& t, Ratio gamma) {
  const long long m = t.size() - 1;
  if (!less_than(1, gamma, m)) return std::nullopt;  // gamma*m <= 1
  std::vector<Vertex> order(static_cast<std::size_t>(t.size()));
  for (Vertex v = 0; v < t.size(); ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(),
                   [&](Vertex a, Vertex b) { return t.degree(a) > t.degree(b); });
  for (Vertex r : order) {
    NiceSubtree s{{r}, r};
    if (is_gamma_nice(t, s, gamma)) return s;
  }
  return std::nullopt;
}

}  // namespace treembed

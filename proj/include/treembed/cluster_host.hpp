#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/graph.hpp"
#include "treembed/ratio.hpp"

namespace treembed {

// How cluster pairs are populated. Each pair is kept with probability
// `retain` and then gets a density drawn uniformly from [low, high]. Clusters
// whose weighted degree falls short of min_weighted_degree * p have their
// sparsest pairs raised to `high` until they reach it. An explicit matrix
// overrides all of this.
struct DensityProfile {
  double retain = 0.95;
  double low = 0.5;
  double high = 1.0;
  double min_weighted_degree = 0.0;
  std::vector<double> matrix;  // optional p*p nominal densities
};

// Synthetic stand-in for the output of a regularity partition: p clusters of
// equal size, each dense pair realised as a random bipartite graph.
struct ClusterHost {
  int p = 0;
  int cluster_size = 0;
  std::vector<double> density;  // nominal, p*p, zero on the diagonal
  Graph underlying;

  int vertex_count() const { return p * cluster_size; }
  int cluster_of(Vertex v) const { return v / cluster_size; }
  Vertex first_vertex(int cluster) const { return cluster * cluster_size; }
  double pair_density(int a, int b) const { return density[static_cast<std::size_t>(a) * p + b]; }

  double weighted_degree(int c) const {
    double s = 0;
    for (int d = 0; d < p; ++d) s += pair_density(c, d);
    return s;
  }
  double weighted_min_degree() const {
    double best = p;
    for (int c = 0; c < p; ++c) best = std::min(best, weighted_degree(c));
    return best;
  }
  // Reduced graph: clusters joined when their pair density reaches the threshold.
  Graph reduced(double threshold) const {
    Graph r(p);
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b)
        if (pair_density(a, b) >= threshold && pair_density(a, b) > 0) r.add_edge(a, b);
    return r;
  }
  // Fraction of realised edges between two clusters.
  double measured_density(int a, int b) const {
    long long e = 0;
    for (int i = 0; i < cluster_size; ++i)
      for (int j = 0; j < cluster_size; ++j) e += underlying.has_edge(first_vertex(a) + i, first_vertex(b) + j);
    return static_cast<double>(e) / (static_cast<double>(cluster_size) * cluster_size);
  }
};

namespace detail {

inline std::vector<double> nominal_densities(int p, const DensityProfile& pr, std::mt19937_64& rng) {
  if (!pr.matrix.empty()) {
    if (pr.matrix.size() != static_cast<std::size_t>(p) * p)
      throw std::invalid_argument("density matrix must have p*p entries");
    std::vector<double> d = pr.matrix;
    for (int a = 0; a < p; ++a) {
      d[static_cast<std::size_t>(a) * p + a] = 0;
      for (int b = 0; b < p; ++b) {
        const double x = d[static_cast<std::size_t>(a) * p + b];
        if (x < 0 || x > 1) throw std::invalid_argument("densities must lie in [0, 1]");
        if (x != d[static_cast<std::size_t>(b) * p + a]) throw std::invalid_argument("density matrix must be symmetric");
      }
    }
    return d;
  }
  if (pr.low < 0 || pr.high > 1 || pr.low > pr.high || pr.retain < 0 || pr.retain > 1)
    throw std::invalid_argument("density profile out of range");
  if (pr.min_weighted_degree * p > pr.high * (p - 1) + 1e-9)
    throw std::invalid_argument("infeasible density profile: weighted degree target exceeds (p-1)*high");
  std::vector<double> d(static_cast<std::size_t>(p) * p, 0.0);
  std::bernoulli_distribution keep(pr.retain);
  std::uniform_real_distribution<double> level(pr.low, pr.high);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      const double x = keep(rng) ? level(rng) : 0.0;
      d[static_cast<std::size_t>(a) * p + b] = d[static_cast<std::size_t>(b) * p + a] = x;
    }
  const double target = pr.min_weighted_degree * p;
  for (int a = 0; a < p; ++a) {
    auto degree = [&] {
      double s = 0;
      for (int b = 0; b < p; ++b) s += d[static_cast<std::size_t>(a) * p + b];
      return s;
    };
    std::vector<int> others;
    for (int b = 0; b < p; ++b)
      if (b != a) others.push_back(b);
    std::stable_sort(others.begin(), others.end(), [&](int x, int y) {
      return d[static_cast<std::size_t>(a) * p + x] < d[static_cast<std::size_t>(a) * p + y];
    });
    for (int b : others) {
      if (degree() >= target) break;
      d[static_cast<std::size_t>(a) * p + b] = d[static_cast<std::size_t>(b) * p + a] = pr.high;
    }
    if (degree() + 1e-9 < target) throw std::invalid_argument("infeasible density profile");
  }
  return d;
}

}  // namespace detail

inline ClusterHost gen_cluster_host(int p, int cluster_size, const DensityProfile& profile, std::uint64_t rng_seed) {
  if (p < 3) throw std::invalid_argument("need at least 3 clusters");
  if (cluster_size < 20) throw std::invalid_argument("clusters need at least 20 vertices");
  std::mt19937_64 rng(rng_seed);
  ClusterHost host;
  host.p = p;
  host.cluster_size = cluster_size;
  host.density = detail::nominal_densities(p, profile, rng);
  host.underlying = Graph(p * cluster_size);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      const double d = host.pair_density(a, b);
      if (d <= 0) continue;
      const bool all = d >= 1;
      // Compare raw 64-bit draws against d * 2^64.
      const auto cut = static_cast<std::uint64_t>(std::ldexp(std::min(d, 1.0), 64) - 1);
      for (int i = 0; i < cluster_size; ++i)
        for (int j = 0; j < cluster_size; ++j)
          if (all || rng() < cut) host.underlying.add_edge(host.first_vertex(a) + i, host.first_vertex(b) + j);
    }
  return host;
}

// deg(v, target) >= (1 - eps) * d * |target|.
inline bool is_typical(const Graph& g, Vertex v, std::span<const Vertex> target, double pair_density, Ratio eps) {
  if (target.empty()) throw std::invalid_argument("typicality needs a nonempty target");
  const double need = (1.0 - eps.value()) * pair_density * static_cast<double>(target.size());
  return g.degree_into(v, target) >= need - 1e-9;
}

struct PairEmbedding {
  Embedding phi;       // over the small tree's vertices
  std::string error;   // empty on success
  int failed_level = -1;

  bool ok() const { return error.empty(); }
};

// Levelwise embedding of a small rooted tree into the pair (a, b): the root
// goes to a vertex of root_target (inside cluster a), even levels to a and odd
// levels to b. Every image is adjacent to its parent's image and, where
// possible, typical to the free part of the opposite cluster. `used` is
// updated in place on success and left untouched on failure.
inline PairEmbedding embed_small_tree_in_pair(const ClusterHost& host, int a, int b, const RootedTree& tree,
                                              std::vector<char>& used, std::span<const Vertex> root_target,
                                              Ratio eps) {
  PairEmbedding out{Embedding(tree.size()), {}, -1};
  if (!at_most(tree.size(), eps, host.cluster_size)) {
    out.error = "tree of size " + std::to_string(tree.size()) + " exceeds eps * cluster size";
    return out;
  }
  const int side_cluster[2] = {a, b};
  const double d = host.pair_density(a, b);
  std::vector<Vertex> taken;
  auto free_part = [&](int cluster) {
    std::vector<Vertex> f;
    for (Vertex v = host.first_vertex(cluster); v < host.first_vertex(cluster) + host.cluster_size; ++v)
      if (!used[v]) f.push_back(v);
    return f;
  };
  auto pick = [&](const std::vector<Vertex>& candidates, int opposite, Vertex parent_image) {
    const std::vector<Vertex> opp = free_part(opposite);
    Vertex fallback = kNoVertex;
    for (Vertex v : candidates) {
      if (used[v] || (parent_image != kNoVertex && !host.underlying.has_edge(v, parent_image))) continue;
      if (opp.empty() || is_typical(host.underlying, v, opp, d, eps)) return v;
      if (fallback == kNoVertex) fallback = v;
    }
    return fallback;
  };
  auto rollback = [&] {
    for (Vertex v : taken) used[v] = 0;
  };
  const std::vector<Vertex> roots(root_target.begin(), root_target.end());
  for (Vertex v : tree.preorder()) {
    const int level = tree.depth(v);
    const int cluster = side_cluster[level & 1];
    const Vertex parent_image = tree.parent(v) == kNoVertex ? kNoVertex : out.phi[tree.parent(v)];
    const Vertex img = level == 0 ? pick(roots, b, kNoVertex) : pick(free_part(cluster), side_cluster[(level + 1) & 1], parent_image);
    if (img == kNoVertex) {
      rollback();
      out.error = "no free vertex available at level " + std::to_string(level);
      out.failed_level = level;
      out.phi = Embedding(tree.size());
      return out;
    }
    used[img] = 1;
    taken.push_back(img);
    out.phi.assign(v, img);
  }
  return out;
}

}  // namespace treembed

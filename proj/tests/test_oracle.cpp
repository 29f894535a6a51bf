#include <catch_amalgamated.hpp>

#include <map>

#include "treembed/oracle.hpp"

using namespace treembed;

namespace {

Graph complete(int n) {
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) g.add_edge(u, v);
  return g;
}

// Tree code minimised over every root, independent of the centroid shortcut.
std::string all_roots_code(const RootedTree& t) {
  std::vector<std::vector<Vertex>> adj(static_cast<std::size_t>(t.size()));
  for (Vertex v = 0; v < t.size(); ++v)
    if (t.parent(v) != kNoVertex) {
      adj[v].push_back(t.parent(v));
      adj[t.parent(v)].push_back(v);
    }
  std::function<std::string(Vertex, Vertex)> code = [&](Vertex v, Vertex from) {
    std::vector<std::string> kids;
    for (Vertex u : adj[v])
      if (u != from) kids.push_back(code(u, v));
    std::sort(kids.begin(), kids.end());
    std::string out = "[";
    for (const auto& k : kids) out += k;
    return out + "]";
  };
  std::string best;
  for (Vertex r = 0; r < t.size(); ++r) {
    auto c = code(r, kNoVertex);
    if (best.empty() || c < best) best = c;
  }
  return best;
}

// Distinct trees over every parent sequence with parent[v] < v.
std::size_t brute_tree_count(int m) {
  std::set<std::string> codes;
  std::vector<Vertex> parent(static_cast<std::size_t>(m + 1), kNoVertex);
  std::function<void(int)> fill = [&](int v) {
    if (v > m) {
      codes.insert(all_roots_code(RootedTree(parent)));
      return;
    }
    for (Vertex p = 0; p < v; ++p) {
      parent[v] = p;
      fill(v + 1);
    }
  };
  fill(1);
  return codes.size();
}

}  // namespace

TEST_CASE("extremal hosts reject trees") {
  Graph cycle(4);
  for (Vertex v = 0; v < 4; ++v) cycle.add_edge(v, (v + 1) % 4);
  const RootedTree star({kNoVertex, 0, 0, 0});
  CHECK_FALSE(tree_contains(cycle, star));

  Graph triangles(6);
  for (int base : {0, 3}) {
    triangles.add_edge(base, base + 1);
    triangles.add_edge(base + 1, base + 2);
    triangles.add_edge(base, base + 2);
  }
  for (const auto& t : enumerate_trees(3)) CHECK_FALSE(tree_contains(triangles, t));

  for (const auto& t : enumerate_trees(6)) {
    const auto phi = tree_contains(complete(7), t);
    REQUIRE(phi);
    CHECK(verify_embedding(complete(7), t, *phi, true));
  }
}

TEST_CASE("tree counts match a parent-sequence brute force") {
  const std::vector<std::size_t> known{1, 1, 2, 3, 6, 11, 23, 47};
  for (int m = 1; m <= 8; ++m) {
    INFO("m = " << m);
    CHECK(enumerate_trees(m).size() == known[static_cast<std::size_t>(m - 1)]);
    CHECK(brute_tree_count(m) == known[static_cast<std::size_t>(m - 1)]);
  }
}

TEST_CASE("host classes") {
  CHECK(enumerate_hosts(2, ScanMode::exhaustive).size() == 2);
  const auto hosts3 = enumerate_hosts(3, ScanMode::exhaustive);
  CHECK(hosts3.size() == 2);
  for (const auto& g : enumerate_hosts(6, ScanMode::exhaustive)) {
    int universal = 0;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      CHECK(g.degree(v) >= 4);
      universal += g.degree(v) == 6 ? 1 : 0;
    }
    CHECK(universal >= 1);
  }
  const auto a = enumerate_hosts(10, ScanMode::random, 5, 42);
  const auto b = enumerate_hosts(10, ScanMode::random, 5, 42);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Vertex u = 0; u < 11; ++u)
      for (Vertex v = 0; v < 11; ++v) CHECK(a[i].has_edge(u, v) == b[i].has_edge(u, v));
}

TEST_CASE("containment agrees with permutation search on small hosts") {
  std::vector<RootedTree> trees;
  for (int m = 0; m <= 4; ++m)
    for (auto& t : enumerate_trees(m)) trees.push_back(std::move(t));
  long long disagreements = 0;
  for (const auto& rest : detail::graph_classes(5)) {
    Graph g(5);
    for (Vertex u = 0; u < 5; ++u)
      for (Vertex v = u + 1; v < 5; ++v)
        if (rest[u] >> v & 1u) g.add_edge(u, v);
    for (const auto& t : trees) {
      const auto phi = tree_contains(g, t);
      disagreements += phi.has_value() != naive_contains(g, t) ? 1 : 0;
      if (phi) CHECK(verify_embedding(g, t, *phi, true));
    }
  }
  CHECK(disagreements == 0);
}

TEST_CASE("scans") {
  CHECK(conjecture_scan(5, 4).pairs_tested == 0);
  const auto exhaustive = conjecture_scan(2, 6);
  CHECK(exhaustive.ok());
  CHECK(exhaustive.pairs_tested > 0);
  ScanOptions opt;
  opt.mode = ScanMode::random;
  opt.budget = 300;
  opt.seed = 3;
  const auto one = conjecture_scan(8, 12, opt);
  opt.threads = 3;
  const auto three = conjecture_scan(8, 12, opt);
  CHECK(one.ok());
  CHECK(one.pairs_tested == 300);
  CHECK(one.failures.size() == three.failures.size());
}

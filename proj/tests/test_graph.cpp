#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "treembed/generators.hpp"
#include "treembed/graph.hpp"
#include "treembed/io.hpp"

using namespace treembed;

namespace {

bool is_tree(const RootedTree& t) {
  // Connected, acyclic and n-1 edges are all implied by a valid parent array.
  return t.edge_count() == t.size() - 1 && static_cast<int>(t.preorder().size()) == t.size();
}

}  // namespace

TEST_CASE("degree queries on small graphs") {
  Graph k4 = complete_graph(4);
  CHECK(min_degree(k4) == 3);
  CHECK(universal_vertices(k4) == std::vector<Vertex>{0, 1, 2, 3});

  Graph c5 = cycle_graph(5);
  CHECK(min_degree(c5) == 2);
  CHECK(universal_vertices(c5).empty());

  Graph k4e(4);
  for (Vertex u = 0; u < 4; ++u)
    for (Vertex v = u + 1; v < 4; ++v)
      if (!(u == 0 && v == 1)) k4e.add_edge(u, v);
  CHECK(min_degree(k4e) == 2);
  CHECK(universal_vertices(k4e) == std::vector<Vertex>{2, 3});
}

TEST_CASE("graph rejects self-loops and reports duplicates") {
  Graph g(3);
  CHECK(g.add_edge(0, 1));
  CHECK_FALSE(g.add_edge(1, 0));
  CHECK(g.edge_count() == 1);
  CHECK_THROWS(g.add_edge(2, 2));
  CHECK_THROWS(g.add_edge(0, 3));
}

TEST_CASE("verify_embedding") {
  RootedTree edge({kNoVertex, 0});
  Graph k3 = complete_graph(3);
  Embedding phi(2);
  phi.assign(0, 0);
  phi.assign(1, 1);
  CHECK(verify_embedding(k3, edge, phi, true).ok);

  SECTION("non-injective map is rejected") {
    phi.assign(1, 0);
    auto v = verify_embedding(k3, edge, phi, true);
    CHECK_FALSE(v.ok);
    CHECK(v.reason.find("non-injective") != std::string::npos);
  }

  SECTION("a 3-path never fits into two disjoint edges") {
    RootedTree path({kNoVertex, 0, 1});
    Graph two(4);
    two.add_edge(0, 1);
    two.add_edge(2, 3);
    int ok = 0;
    std::vector<Vertex> hosts{0, 1, 2, 3};
    for (Vertex a : hosts)
      for (Vertex b : hosts)
        for (Vertex c : hosts) {
          if (a == b || b == c || a == c) continue;
          Embedding e(3);
          e.assign(0, a);
          e.assign(1, b);
          e.assign(2, c);
          ok += verify_embedding(two, path, e, true).ok ? 1 : 0;
        }
    CHECK(ok == 0);
  }

  SECTION("partial maps pass only without the totality requirement") {
    Embedding half(2);
    half.assign(0, 2);
    CHECK(verify_embedding(k3, edge, half, false).ok);
    CHECK_FALSE(verify_embedding(k3, edge, half, true).ok);
  }
}

TEST_CASE("rooted tree navigation") {
  RootedTree t({kNoVertex, 0, 0, 1, 1, 2});
  CHECK(t.root() == 0);
  CHECK(t.size() == 6);
  CHECK(t.preorder() == std::vector<Vertex>{0, 1, 3, 4, 2, 5});
  CHECK(t.subtree_size(1) == 3);
  CHECK(t.depth(5) == 2);
  CHECK(t.side(3) == 0);
  CHECK(t.side(2) == 1);
  CHECK(t.is_leaf(5));
  CHECK_FALSE(t.is_leaf(2));
  CHECK_THROWS(RootedTree({kNoVertex, 2, 1}));
  CHECK_THROWS(RootedTree({kNoVertex, kNoVertex}));
  auto r = t.rerooted(5);
  CHECK(r.root() == 5);
  CHECK(r.parent(0) == 2);
}

TEST_CASE("gen_tree shapes and determinism") {
  auto single = gen_tree(1, TreeProfile::uniform, 7);
  CHECK(single.size() == 2);
  CHECK(single.root() == 0);

  auto broom = gen_tree(4, TreeProfile::broom, 0);
  REQUIRE(broom.size() == 5);
  std::vector<int> degrees;
  for (Vertex v = 0; v < 5; ++v) degrees.push_back(broom.degree(v));
  std::sort(degrees.begin(), degrees.end());
  // K_{1,3} with one leaf extended: degrees 1,1,1,2,3.
  CHECK(degrees == std::vector<int>{1, 1, 1, 2, 3});

  CHECK(gen_tree(9, TreeProfile::uniform, 42).parents() ==
        gen_tree(9, TreeProfile::uniform, 42).parents());

  for (auto profile : {TreeProfile::uniform, TreeProfile::caterpillar, TreeProfile::broom,
                       TreeProfile::bad_heavy}) {
    for (int m : {3, 10, 57, 300}) {
      if (profile == TreeProfile::bad_heavy && m < 100) continue;
      auto t = gen_tree(m, profile, static_cast<std::uint64_t>(m) * 31 + 5);
      CHECK(t.size() == m + 1);
      CHECK(is_tree(t));
    }
  }
}

TEST_CASE("uniform trees cover all labelled trees on 4 vertices evenly") {
  // 4^2 = 16 labelled trees; Pruefer decoding is a bijection.
  std::map<std::vector<std::pair<Vertex, Vertex>>, int> seen;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      auto t = detail::tree_from_pruefer({a, b}, 4);
      auto e = t.edges();
      for (auto& [u, v] : e)
        if (u > v) std::swap(u, v);
      std::sort(e.begin(), e.end());
      ++seen[e];
    }
  CHECK(seen.size() == 16);
}

TEST_CASE("bad-heavy trees carry enough bad micro-trees") {
  for (int m : {100, 400, 1000}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto t = gen_tree(m, TreeProfile::bad_heavy, seed);
      auto d = cut_tree(t, kBadHeavyBeta, true);
      CHECK(count_bad_trees(t, d) >= (33 * m + 99) / 100);
    }
  }
}

TEST_CASE("random min-degree hosts meet the hypothesis") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int m = 2 + static_cast<int>(seed % 40);
    HostProfile pr;
    pr.edge_prob = 0.2 + 0.6 * static_cast<double>(seed % 7) / 6.0;
    auto h = gen_host(m, pr, seed);
    REQUIRE(h.graph.vertex_count() == m + 1);
    REQUIRE(min_degree(h.graph) >= (2 * m) / 3);
    REQUIRE_FALSE(universal_vertices(h.graph).empty());
  }
}

TEST_CASE("extremal and structured host kinds") {
  HostProfile cliques;
  cliques.kind = HostKind::disjoint_cliques;
  cliques.clique_size = 3;
  cliques.copies = 2;
  auto two = gen_host(3, cliques, 1).graph;
  CHECK(two.vertex_count() == 6);
  CHECK(two.edge_count() == 6);
  CHECK(min_degree(two) == 2);

  HostProfile reg;
  reg.kind = HostKind::regular;
  reg.degree = 3;
  CHECK_THROWS(gen_host(4, reg, 1));  // 5 vertices, odd degree
  reg.degree = 2;
  auto c = gen_host(3, reg, 1).graph;
  CHECK(min_degree(c) == 2);
  CHECK(c.edge_count() == 4);

  HostProfile special;
  special.kind = HostKind::gamma_special;
  special.edge_prob = 0.9;
  auto sp = gen_host(12, special, 3);
  REQUIRE(sp.parts.size() == 3);
  for (Vertex u : sp.parts[0])
    for (Vertex v : sp.parts[1]) CHECK_FALSE(sp.graph.has_edge(u, v));
  for (const auto& part : sp.parts) {
    CHECK(static_cast<double>(part.size()) >= 13.0 / 3 - 3.9);
    CHECK(static_cast<double>(part.size()) <= 13.0 / 3 + 3.9);
  }

  CHECK(gen_host(20, HostProfile{}, 9).graph.edge_list() ==
        gen_host(20, HostProfile{}, 9).graph.edge_list());
}

TEST_CASE("edge list and tree json round trip") {
  auto g = gen_host(15, HostProfile{}, 4).graph;
  std::stringstream ss;
  write_edge_list(ss, g);
  auto back = read_edge_list(ss);
  CHECK(back.edge_list() == g.edge_list());

  auto t = gen_tree(20, TreeProfile::uniform, 3);
  auto j = tree_to_json(t);
  CHECK(j["root"] == 0);
  CHECK(tree_from_json(j).parents() == t.parents());
}

#include <catch_amalgamated.hpp>

#include "treembed/generators.hpp"
#include "treembed/structured.hpp"

using namespace treembed;

namespace {

Graph complete(int n) {
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) g.add_edge(u, v);
  return g;
}

StructuredHost planted(int m, std::uint64_t seed) {
  HostProfile hp;
  hp.kind = HostKind::tripartite_structured;
  return StructuredHost::from_generated(gen_host(m, hp, seed));
}

// Brute force over all labelings into three parts.
bool brute_special(const Graph& g, Ratio gamma) {
  const int n = g.vertex_count();
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (int code = 0; code < total; ++code) {
    SpecialPartition sp;
    sp.gamma = gamma;
    int c = code;
    for (Vertex v = 0; v < n; ++v, c /= 3) sp.parts[c % 3].push_back(v);
    if (is_gamma_special(g, gamma, sp)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("special partitions are checked exactly") {
  const Graph k = complete(31);
  SpecialPartition sp;
  for (Vertex v = 0; v < 31; ++v) sp.parts[v % 3].push_back(v);
  CHECK_FALSE(is_gamma_special(k, Ratio{1, 10}, sp));

  // Sizes m/2, m/4, m/4 break the size window.
  SpecialPartition lopsided;
  for (Vertex v = 0; v < 31; ++v) lopsided.parts[v < 16 ? 0 : (v < 24 ? 1 : 2)].push_back(v);
  const auto verdict = is_gamma_special(complete(31), Ratio{1, 100}, lopsided);
  CHECK_FALSE(verdict);
  CHECK(verdict.reason.find("size window") != std::string::npos);

  SpecialPartition overlap = sp;
  overlap.parts[1].push_back(0);
  CHECK_FALSE(is_gamma_special(k, Ratio{1, 10}, overlap));
}

TEST_CASE("planted special partitions are found") {
  HostProfile hp;
  hp.kind = HostKind::gamma_special;
  hp.gamma = Ratio{1, 20};
  const auto gh = gen_host(120, hp, 5);
  SpecialPartition truth;
  truth.gamma = hp.gamma;
  for (int i = 0; i < 3; ++i) truth.parts[i] = gh.parts[i];
  CHECK(is_gamma_special(gh.graph, hp.gamma, truth));
  const auto found = find_gamma_special(gh.graph, hp.gamma);
  REQUIRE(found);
  CHECK(is_gamma_special(gh.graph, hp.gamma, *found));
  CHECK_FALSE(find_gamma_special(complete(121), hp.gamma));
}

TEST_CASE("exact special search agrees with brute force on small graphs") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    Graph g(9);
    for (Vertex u = 0; u < 9; ++u)
      for (Vertex v = u + 1; v < 9; ++v)
        if (std::bernoulli_distribution(0.6)(rng)) g.add_edge(u, v);
    const Ratio gamma{1, 12};
    CHECK(find_gamma_special(g, gamma).has_value() == brute_special(g, gamma));
  }
}

TEST_CASE("holes are found in planted sparse sets only") {
  // An independent third, everything else present.
  const int n = 301;
  Graph g(n);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (v >= 101) g.add_edge(u, v);
  const Ratio gamma{1, 100};
  const Ratio eps{1, 1000};
  const auto report = find_holes(g, gamma, eps);
  REQUIRE(report.holes.size() == 1);
  CHECK(is_valid_hole(g, report.holes.front(), gamma, eps));
  CHECK(report.holes.front().vertices.size() == static_cast<std::size_t>(hole_size(n - 1, gamma)));
  CHECK(report.holes.front().vertices.back() < 101);
  CHECK(report.v_bad.size() == 101);
  CHECK(find_holes(complete(n), gamma, eps).holes.empty());
}

TEST_CASE("structured hosts are validated") {
  auto h = planted(600, 1);
  CHECK(check_structured_host(h));
  auto wide = h;
  while (2 * wide.parts[4].size() <= wide.parts[3].size()) {
    wide.parts[4].push_back(wide.parts[3].back());
    wide.parts[3].pop_back();
  }
  const auto v = check_structured_host(wide);
  CHECK_FALSE(v);
  CHECK(v.reason.find("H5") != std::string::npos);
}

TEST_CASE("bad-heavy trees embed into planted hosts") {
  for (int m : {400, 1000, 1999}) {
    const auto h = planted(m, static_cast<std::uint64_t>(m));
    const auto t = gen_tree(m, TreeProfile::bad_heavy, static_cast<std::uint64_t>(m) + 1);
    const auto res = embed_bad_heavy(h, t, kBadHeavyBeta);
    INFO("m = " << m << ": " << res.error);
    REQUIRE(res.ok());
    CHECK(verify_embedding(h.graph, t, res.phi, true));
    CHECK(res.first.conclusion_i);
    CHECK(res.first.conclusion_ii);
    CHECK(res.first.size_ok);
  }
}

TEST_CASE("first stage routes two-seeded trees") {
  // Seed 0 carries the bad paths; seed 4 hangs off a three-vertex tree and
  // seed 6 off a single vertex, with three leaves between them.
  const int paths = 300;
  const int n = 10 + 3 * paths;
  std::vector<Vertex> parent(static_cast<std::size_t>(n), kNoVertex);
  parent[1] = 0;
  parent[2] = 1;
  parent[3] = 2;
  parent[4] = 3;
  parent[5] = 0;
  parent[6] = 5;
  parent[7] = 6;
  parent[8] = 4;
  parent[9] = 4;
  TreeDecomposition d;
  d.beta = kBadHeavyBeta;
  d.seeds = {0, 4, 6};
  auto micro = [&](std::vector<Vertex> vs, Vertex root, Vertex seed, Vertex second = kNoVertex,
                   Vertex connector = kNoVertex) {
    MicroTree mt;
    mt.vertices = std::move(vs);
    mt.root = root;
    mt.parent_seed = seed;
    mt.second_seed = second;
    mt.connector = connector;
    return mt;
  };
  d.F2.push_back(micro({1, 2, 3}, 1, 0, 4, 3));
  d.F2.push_back(micro({5}, 5, 0, 6, 5));
  for (Vertex leaf : {7, 8, 9}) d.L.push_back(micro({leaf}, leaf, parent[leaf]));
  for (int k = 0; k < paths; ++k) {
    const Vertex a = 10 + 3 * k;
    parent[a] = 0;
    parent[a + 1] = a;
    parent[a + 2] = a + 1;
    d.F1.push_back(micro({a, a + 1, a + 2}, a, 0));
  }
  const RootedTree t(parent);
  d.m = t.edge_count();
  const auto h = planted(t.edge_count(), 9);
  const auto res = embed_first_stage(h, t, d);
  INFO(res.error);
  REQUIRE(res.ok());
  CHECK_FALSE(res.cases.empty());
  CHECK(res.s_star != kNoVertex);
  CHECK(verify_embedding(h.graph, t, res.phi, false));
  CHECK(res.conclusion_i);
  CHECK(res.conclusion_ii);
}

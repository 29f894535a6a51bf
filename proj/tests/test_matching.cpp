#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "treembed/generators.hpp"
#include "treembed/matching.hpp"

using namespace treembed;

namespace {

std::vector<Vertex> first_n(int count) {
  std::vector<Vertex> out(static_cast<std::size_t>(count));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

Graph from_edges(int n, std::initializer_list<std::pair<int, int>> edges) {
  Graph g(n);
  for (auto [u, v] : edges) g.add_edge(u, v);
  return g;
}

// Random N of the required size for a graph on p vertices.
std::vector<Vertex> random_n(int p, Ratio xi, std::uint64_t seed) {
  std::vector<Vertex> all = first_n(p);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(detail::required_n_size(p, xi)));
  std::sort(all.begin(), all.end());
  return all;
}

// A, A', B, B', C, D, E, E', F, F' as 0..9 joined like the branching shape.
Graph branch_graph() {
  return from_edges(10, {{0, 2}, {1, 3}, {2, 4}, {3, 4}, {4, 5}, {5, 6}, {5, 7}, {6, 8}, {7, 9}});
}

}  // namespace

TEST_CASE("high degree set examples") {
  Graph k6 = complete_graph(6);
  std::vector<Vertex> s{0, 1, 2};
  auto a = high_degree_set(k6, s, Ratio{1, 20});
  CHECK(a.size() == 6);
  CHECK(meets_double_counting_bound(6, 6, Ratio{1, 20}));

  CHECK(high_degree_set(k6, std::vector<Vertex>{}, Ratio{1, 20}).size() == 6);

  Graph k4 = complete_graph(4);
  CHECK(high_degree_set(k4, first_n(4), Ratio{1, 10}).size() == 4);

  Graph c6 = cycle_graph(6);
  CHECK_THROWS(high_degree_set(c6, std::vector<Vertex>{0}, Ratio{1, 10}));
}

TEST_CASE("exact threshold arithmetic") {
  // (1/2 - sqrt(1/4)) * 10 = 0: every count qualifies.
  CHECK(at_least_half_minus_sqrt(0, 10, Ratio{1, 4}));
  // (1/2 - 1/10) * 10 = 4 with psi = 1/100.
  CHECK(at_least_half_minus_sqrt(4, 10, Ratio{1, 100}));
  CHECK_FALSE(at_least_half_minus_sqrt(3, 10, Ratio{1, 100}));
  // (1/3 + 1/100) * 300 = 103.
  CHECK(meets_double_counting_bound(103, 300, Ratio{1, 100}));
  CHECK_FALSE(meets_double_counting_bound(102, 300, Ratio{1, 100}));
}

TEST_CASE("double counting bound on random instances") {
  const Ratio psis[] = {{1, 100}, {1, 30}, {1, 10}, {1, 4}};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const int n = 30 + static_cast<int>((seed * 37) % 120);
    const Ratio psi = psis[seed % 4];
    const int min_deg = static_cast<int>((Ratio{2, 3} - psi).ceil_times(n));
    Graph g = random_graph_with_min_degree(n, 0.55, min_deg, seed);
    std::mt19937_64 rng(seed);
    std::vector<Vertex> s;
    for (Vertex v = 0; v < n; ++v)
      if (rng() % 3 != 0) s.push_back(v);
    auto a = high_degree_set(g, s, psi);
    CHECK(meets_double_counting_bound(static_cast<long long>(a.size()), n, psi));
  }
}

TEST_CASE("N-good matching on K6") {
  Graph k6 = complete_graph(6);
  const Ratio xi{1, 25};
  REQUIRE(detail::required_n_size(6, xi) == 4);
  std::vector<Vertex> n_set{0, 1, 2, 3};
  auto r = n_good_matching(k6, n_set, xi);
  REQUIRE(r.ok());
  CHECK(r.matching->excluded.empty());
  CHECK(r.matching->edges.size() == 3);
  int cross = 0;
  for (auto [u, v] : r.matching->edges) cross += (u >= 4) != (v >= 4) ? 1 : 0;
  CHECK(cross == 2);
  CHECK(validate_matching(k6, r.matching->edges, r.matching->excluded, n_set).ok);
}

TEST_CASE("N-good matching preconditions and relaxed mode") {
  Graph edge = from_edges(2, {{0, 1}});
  std::vector<Vertex> both{0, 1};
  CHECK_THROWS(n_good_matching(edge, both, Ratio{1, 25}));
  MatchOptions relaxed;
  relaxed.relaxed = true;
  auto r = n_good_matching(edge, both, Ratio{1, 25}, relaxed);
  REQUIRE(r.ok());
  CHECK(r.matching->edges == std::vector<std::pair<Vertex, Vertex>>{{0, 1}});
  CHECK(r.matching->excluded.empty());
}

TEST_CASE("Hall witness when outside vertices crowd a few N vertices") {
  // 30 vertices, N = 10..29; outside vertices 0..9 see only N vertices 10 and 11.
  Graph h(30);
  for (Vertex u = 10; u < 30; ++u)
    for (Vertex v = u + 1; v < 30; ++v) h.add_edge(u, v);
  for (Vertex u = 0; u < 10; ++u)
    for (Vertex v = u + 1; v < 10; ++v) h.add_edge(u, v);
  for (Vertex u = 0; u < 10; ++u) {
    h.add_edge(u, 10);
    h.add_edge(u, 11);
  }
  std::vector<Vertex> n_set;
  for (Vertex v = 10; v < 30; ++v) n_set.push_back(v);
  MatchOptions relaxed;
  relaxed.relaxed = true;
  relaxed.slack = 3;
  auto r = n_good_matching(h, n_set, Ratio{1, 30}, relaxed);
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.witness.has_value());
  std::vector<char> in_n(30, 0);
  for (Vertex v : n_set) in_n[v] = 1;
  CHECK(r.witness->verify(h, in_n));
  CHECK(r.witness->deficient.size() == 10);
  CHECK(r.witness->neighbourhood == std::vector<Vertex>{10, 11});
}

TEST_CASE("good structures on K6") {
  Graph k6 = complete_graph(6);
  std::vector<Vertex> n_set{0, 1, 2, 3};
  auto r = good_structures(k6, n_set, Ratio{1, 25});
  REQUIRE(r.ok());
  CHECK(r.structures->excluded.empty());
  CHECK(validate_partition(k6, r.structures->in_good, n_set).ok);
  CHECK(validate_partition(k6, r.structures->out_good, n_set).ok);
}

TEST_CASE("good structures without outside vertices are the matching") {
  Graph h = from_edges(6, {{0, 1}, {2, 3}, {4, 5}});
  auto n_set = first_n(6);
  MatchOptions relaxed;
  relaxed.relaxed = true;
  auto r = good_structures(h, n_set, Ratio{1, 25}, relaxed);
  REQUIRE(r.ok());
  const std::vector<std::vector<Vertex>> pairs{{0, 1}, {2, 3}, {4, 5}};
  CHECK(r.structures->in_good.paths == pairs);
  CHECK(r.structures->out_good.paths == pairs);
}

TEST_CASE("good structures on random dense graphs") {
  const Ratio xi{3, 100};
  const int p = 60;
  const int min_deg = static_cast<int>((Ratio{2, 3} - xi).ceil_times(p));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Graph h = random_graph_with_min_degree(p, 0.6, min_deg, seed);
    auto n_set = random_n(p, xi, seed + 1000);
    auto r = good_structures(h, n_set, xi);
    INFO("seed " << seed << " " << r.failure);
    REQUIRE(r.ok());
    const auto& gs = *r.structures;
    CHECK(static_cast<long long>(gs.y.size()) <= (xi * Ratio{3, 1}).floor_times(p) + 1);
    CHECK(static_cast<long long>(gs.excluded.size()) <= (xi * Ratio{15, 1}).floor_times(p) + 1);
    std::vector<Vertex> n_rest;
    for (Vertex v : n_set)
      if (!std::binary_search(gs.excluded.begin(), gs.excluded.end(), v)) n_rest.push_back(v);
    CHECK(validate_matching(h, gs.matching, gs.excluded, n_rest).ok);
    CHECK(validate_partition(h, gs.in_good, n_rest).ok);
    CHECK(validate_partition(h, gs.out_good, n_rest).ok);
  }
}

TEST_CASE("partition validator shapes") {
  Graph path4 = from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  PathPartition out;
  out.kind = PartitionKind::out_good;
  out.paths = {{0, 1, 2, 3}};
  CHECK(validate_partition(path4, out, std::vector<Vertex>{1, 2}).ok);
  CHECK_FALSE(validate_partition(path4, out, std::vector<Vertex>{1}).ok);

  Graph path6 = from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  PathPartition in;
  in.kind = PartitionKind::in_good;
  in.paths = {{0, 1, 2, 3, 4, 5}};
  CHECK(validate_partition(path6, in, std::vector<Vertex>{0, 2, 3, 5}).ok);
  CHECK_FALSE(validate_partition(path6, in, std::vector<Vertex>{0, 2, 3}).ok);

  PathPartition missing = in;
  missing.paths = {{0, 1}};
  CHECK_FALSE(validate_partition(path6, missing, std::vector<Vertex>{0, 1}).ok);
}

TEST_CASE("branching shape is accepted only by modified kinds") {
  Graph h = branch_graph();
  PathPartition part;
  part.kind = PartitionKind::out_modified;
  BranchShape br;
  std::iota(br.at.begin(), br.at.end(), 0);
  part.branches = {br};
  const std::vector<Vertex> n_set{2, 3, 4, 5, 6, 7};
  CHECK(validate_partition(h, part, n_set).ok);
  part.kind = PartitionKind::out_good;
  CHECK_FALSE(validate_partition(h, part, n_set).ok);
}

TEST_CASE("modified structures attach leftover R vertices to inner path vertices") {
  Graph h = branch_graph();
  const std::vector<Vertex> n_set{2, 3, 4, 5, 6, 7};
  MatchOptions relaxed;
  relaxed.relaxed = true;
  auto r = modified_structures(h, n_set, Ratio{1, 25}, PartitionKind::out_modified, 0, relaxed);
  INFO(r.failure);
  REQUIRE(r.ok());
  CHECK(r.used_branches);
  CHECK(r.excluded.empty());
  CHECK(r.partition->branches.size() == 1);
  CHECK(r.partition->paths.empty());

  // With a threshold below the internal matching the standard partition comes back.
  auto plain = modified_structures(complete_graph(6), std::vector<Vertex>{0, 1, 2, 3}, Ratio{1, 25},
                                   PartitionKind::out_modified, -1);
  REQUIRE(plain.ok());
  CHECK_FALSE(plain.used_branches);
}

TEST_CASE("modified structures on random graphs always validate") {
  const Ratio xi{1, 50};
  const int p = 48;
  const int min_deg = static_cast<int>((Ratio{2, 3} - xi).ceil_times(p));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Graph h = random_graph_with_min_degree(p, 0.55, min_deg, seed);
    auto n_set = random_n(p, xi, seed);
    for (auto kind : {PartitionKind::in_modified, PartitionKind::out_modified}) {
      auto r = modified_structures(h, n_set, xi, kind, p);
      INFO(r.failure);
      CHECK(r.ok());
    }
  }
}

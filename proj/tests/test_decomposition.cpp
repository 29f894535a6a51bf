#include <catch_amalgamated.hpp>

#include <algorithm>
#include <functional>

#include "treembed/decomposition.hpp"
#include "treembed/generators.hpp"

using namespace treembed;

namespace {

RootedTree path_tree(int n) {
  std::vector<Vertex> parent(static_cast<std::size_t>(n));
  parent[0] = kNoVertex;
  for (int i = 1; i < n; ++i) parent[i] = i - 1;
  return RootedTree(std::move(parent));
}

RootedTree star_tree(int leaves) {
  std::vector<Vertex> parent(static_cast<std::size_t>(leaves + 1), 0);
  parent[0] = kNoVertex;
  return RootedTree(std::move(parent));
}

// Every rooted labelled tree on n vertices with root 0 and parent[v] < v.
void for_each_recursive_tree(int n, const std::function<void(const RootedTree&)>& visit) {
  std::vector<Vertex> parent(static_cast<std::size_t>(n), kNoVertex);
  std::function<void(int)> rec = [&](int v) {
    if (v == n) {
      visit(RootedTree(parent));
      return;
    }
    for (Vertex p = 0; p < v; ++p) {
      parent[v] = p;
      rec(v + 1);
    }
  };
  rec(1);
}

}  // namespace

TEST_CASE("cut_tree on a star keeps only the centre") {
  auto t = star_tree(5);
  auto d = cut_tree(t, Ratio{2, 5});  // beta*m = 2
  CHECK(d.seeds == std::vector<Vertex>{0});
  CHECK(d.L.size() == 5);
  CHECK(d.F1.empty());
  CHECK(d.F2.empty());
  CHECK(check_decomposition(t, d).ok());
}

TEST_CASE("cut_tree on a 21-vertex path") {
  auto t = path_tree(21);
  auto d = cut_tree(t, Ratio{1, 5});
  CHECK(d.first_pass == std::vector<Vertex>{16, 11, 6, 1, 0});
  // Segments 2..5, 7..10 and 12..15 sit between two seeds and have size 4 <= 1/beta.
  std::vector<Vertex> absorbed = d.absorbed;
  std::sort(absorbed.begin(), absorbed.end());
  CHECK(absorbed == std::vector<Vertex>{2, 3, 4, 5, 7, 8, 9, 10, 12, 13, 14, 15});
  REQUIRE(d.F1.size() == 1);
  CHECK(d.F1[0].vertices == std::vector<Vertex>{17, 18, 19, 20});
  CHECK(d.F1[0].root == 17);
  CHECK(d.F1[0].parent_seed == 16);
  auto report = check_decomposition(t, d);
  CHECK(report.a_root_is_seed);
  CHECK(report.d_leaves);
  CHECK(report.e_tiny);
  CHECK(report.f_small);
  CHECK(report.g_one_neighbour);
  CHECK(report.h_two_neighbours);
  CHECK(report.i_connectors);
  CHECK(report.partition);
}

TEST_CASE("small trees are cut only at the root") {
  auto t = gen_tree(9, TreeProfile::uniform, 11);
  auto d = cut_tree(t, Ratio{1, 1});
  CHECK(d.seeds == std::vector<Vertex>{t.root()});
  CHECK(check_decomposition(t, d).ok());
}

TEST_CASE("cut_tree invariants on random trees") {
  const Ratio betas[] = {{1, 20}, {1, 10}, {1, 5}};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const int m = 50 + static_cast<int>((seed * 137) % 1951);
    const auto profile = seed % 3 == 0 ? TreeProfile::caterpillar : TreeProfile::uniform;
    auto t = gen_tree(m, profile, seed);
    for (Ratio beta : betas) {
      auto d = cut_tree(t, beta);
      auto r = check_decomposition(t, d);
      INFO("m=" << m << " beta=" << beta.str() << " " << (r.violations.empty() ? "" : r.violations[0]));
      CHECK(r.ok());
    }
  }
}

TEST_CASE("seeds on a two-seeded F2 tree are recorded as connectors") {
  // Root 0 with a long arm; a deep heavy subtree forces a seed far down so the
  // arm between them becomes a two-seeded tree.
  const int n = 41;
  std::vector<Vertex> parent(static_cast<std::size_t>(n));
  parent[0] = kNoVertex;
  for (int i = 1; i <= 12; ++i) parent[i] = i - 1;  // arm 0..12
  for (int i = 13; i < n; ++i) parent[i] = 12;      // broom head on 12
  RootedTree t(std::move(parent));
  auto d = cut_tree(t, Ratio{1, 4});
  auto r = check_decomposition(t, d);
  CHECK(r.ok());
  CHECK(d.is_seed(12));
  CHECK(d.is_seed(1));
  REQUIRE(d.f2_prime().size() == 1);
  const MicroTree& arm = *d.f2_prime()[0];
  CHECK(arm.root == 2);
  CHECK(arm.second_seed == 12);
  CHECK(arm.connector == 11);
  CHECK(d.connectors == std::vector<Vertex>{2, 11});
}

TEST_CASE("classify micro-trees") {
  auto endpoint = classify(path_tree(3));
  CHECK(endpoint.t == 3);
  CHECK(endpoint.t1 == 2);
  CHECK(endpoint.t2 == 1);
  CHECK(endpoint.is_bad);

  auto middle = classify(RootedTree({kNoVertex, 0, 0}));
  CHECK(middle.t1 == 1);
  CHECK(middle.t2 == 2);
  CHECK(middle.category == Category::Unbal);
  CHECK_FALSE(middle.is_bad);

  auto edge = classify(path_tree(2));
  CHECK(edge.category == Category::Bal);
  CHECK_FALSE(edge.is_bad);

  auto near = make_type(3, 2);
  CHECK(near.category == Category::NearBal);
  CHECK(make_type(2, 3).category == Category::Unbal);
}

TEST_CASE("classify agrees with depth parity on all small rooted trees") {
  for (int n = 1; n <= 7; ++n) {
    for_each_recursive_tree(n, [&](const RootedTree& t) {
      int even = 0;
      for (Vertex v = 0; v < n; ++v) even += t.depth(v) % 2 == 0 ? 1 : 0;
      auto tt = classify(t);
      REQUIRE(tt.t1 == even);
      REQUIRE(tt.t == n);
      std::vector<Vertex> all(static_cast<std::size_t>(n));
      for (Vertex v = 0; v < n; ++v) all[v] = v;
      REQUIRE(classify(t, all, t.root()) == tt);
    });
  }
}

TEST_CASE("pad_seeds reaches 47 * 2^j exactly") {
  CHECK(padding_exponent(Ratio{1, 10}) == 8);
  CHECK(padded_seed_count(Ratio{1, 10}) == 12032);
  CHECK(padding_exponent(Ratio{1, 1}) == 1);
  CHECK(padded_seed_count(Ratio{1, 1}) == 94);

  auto t = gen_tree(300, TreeProfile::uniform, 5);
  auto d = cut_tree(t, Ratio{1, 5});
  auto padded = pad_seeds(t, d);
  CHECK(static_cast<long long>(padded.decomposition.seeds.size()) == padded_seed_count(Ratio{1, 5}));
  CHECK(padded.original_size == t.size());
  for (Vertex v = padded.original_size; v < padded.tree.size(); ++v) {
    CHECK(padded.tree.parent(v) == t.root());
    CHECK(padded.tree.is_leaf(v));
  }

  auto again = pad_seeds(padded.tree, padded.decomposition);
  CHECK(again.tree.size() == padded.tree.size());
}

TEST_CASE("gamma-nice subtrees") {
  auto star = star_tree(10);
  auto s = gamma_nice_subtree(star, Ratio{1, 5});
  REQUIRE(s.has_value());
  CHECK(s->root == 0);
  CHECK(s->vertices == std::vector<Vertex>{0});

  CHECK_FALSE(gamma_nice_subtree(star, Ratio{1, 10}).has_value());

  // On a 9-vertex path any single vertex works; a pair not rooted at its top does not.
  auto path = path_tree(9);
  CHECK(is_gamma_nice(path, {{4}, 4}, Ratio{1, 4}));
  CHECK(is_gamma_nice(path, {{0}, 0}, Ratio{1, 4}));
  CHECK_FALSE(is_gamma_nice(path, {{3, 4}, 4}, Ratio{1, 4}));
  CHECK_FALSE(is_gamma_nice(path, {{2, 3, 4}, 3}, Ratio{1, 4}));
  auto found = gamma_nice_subtree(path, Ratio{1, 4});
  REQUIRE(found.has_value());
  CHECK(is_gamma_nice(path, *found, Ratio{1, 4}));
}

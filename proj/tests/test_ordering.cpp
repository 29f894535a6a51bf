#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>

#include "treembed/decomposition.hpp"
#include "treembed/generators.hpp"
#include "treembed/ordering.hpp"

using namespace treembed;

namespace {

// Spine 0..k-1 rooted at 0; spine vertex i gets leaves(i) pendant leaves.
template <class F>
std::pair<RootedTree, std::vector<Vertex>> spine_with_leaves(int k, F leaves) {
  std::vector<Vertex> parent{kNoVertex};
  for (int i = 1; i < k; ++i) parent.push_back(i - 1);
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < leaves(i); ++l) parent.push_back(i);
  std::vector<Vertex> seeds(static_cast<std::size_t>(k));
  std::iota(seeds.begin(), seeds.end(), 0);
  return {RootedTree(std::move(parent)), seeds};
}

}  // namespace

TEST_CASE("block exponent") {
  CHECK(block_exponent(47) == 0);
  CHECK(block_exponent(94) == 1);
  CHECK(block_exponent(12032) == 8);
  CHECK(block_exponent(141) == -1);
  CHECK(block_exponent(46) == -1);
  CHECK_THROWS(build_orders(RootedTree({kNoVertex, 0}), {0, 1}));
}

TEST_CASE("seeds with distinct leaf counts") {
  auto [t, seeds] = spine_with_leaves(47, [](int i) { return 46 - i; });
  auto o = build_orders(t, seeds);
  for (int i = 0; i < 47; ++i) CHECK(o.sigma[i] == i);
  CHECK(o.leaf_count[0] == 46);
  CHECK(o.leaf_count[46] == 0);
  auto gt = build_group_tree(o);
  REQUIRE(gt.blocks.size() == 1);
  REQUIRE(gt.blocks[0].size() == 12);
  // The first group of five holds sigma ranks 17..21 (1-based).
  const SmallGroup& five = gt.blocks[0][4];
  CHECK(five.slot == 4);
  CHECK(five.seeds == std::vector<Vertex>{16, 17, 18, 19, 20});
  CHECK(gt.blocks[0][1].type == GroupType::type1);
  CHECK(gt.blocks[0][6].type == GroupType::type1);
  CHECK(gt.blocks[0][11].seeds == std::vector<Vertex>{46});
  auto seqs = build_sequences(gt);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0][0].x == std::vector<Vertex>{0, 4, 8, 12, 16, 21});
  CHECK(seqs[0][0].y == std::vector<Vertex>{0, 25, 29, 33, 37, 42, 46});
  CHECK(check_ordering(o, gt, seqs).empty());
}

TEST_CASE("seed stars without leaves keep the preorder") {
  std::vector<Vertex> parent(48, 0);
  parent[0] = kNoVertex;
  RootedTree t(parent);
  std::vector<Vertex> seeds(47);
  std::iota(seeds.begin(), seeds.end(), 1);
  auto o = build_orders(t, seeds);
  CHECK(o.sigma == o.tau);
  CHECK(o.rho == o.tau);
}

TEST_CASE("half swap moves the block with the tau-first seed to the front") {
  auto [t, seeds] = spine_with_leaves(94, [](int i) { return i; });
  auto o = build_orders(t, seeds);
  CHECK(o.sigma.front() == 93);
  CHECK(o.rho.front() == 0);
  std::set<Vertex> second(o.rho.begin() + 47, o.rho.end());
  CHECK(*second.begin() == 47);
  CHECK(*second.rbegin() == 93);
  auto gt = build_group_tree(o);
  CHECK(gt.large_count(0) + gt.large_count(1) == 3);
  auto seqs = build_sequences(gt);
  REQUIRE(seqs[1].size() == 1);
  CHECK(seqs[1][0].x == seqs[0][0].y);
  CHECK(seqs[1][0].x.size() == 7);
  CHECK(seqs[1][0].y.size() == 8);
  CHECK(seqs[1][0].y[0] == seqs[0][0].y[0]);
  CHECK(std::equal(seqs[0][1].y.begin(), seqs[0][1].y.end(), seqs[1][0].y.begin() + 1));
  CHECK(check_ordering(o, gt, seqs).empty());
}

TEST_CASE("relevant seed cases") {
  auto [t, seeds] = spine_with_leaves(47, [](int i) { return 46 - i; });
  auto o = build_orders(t, seeds);
  auto gt = build_group_tree(o);
  auto seqs = build_sequences(gt);
  // Group 0 is type 2: its last seed sees only the third.
  auto a = relevant_seeds(3, gt, seqs);
  CHECK(a.rule == 'a');
  CHECK(a.seeds == std::vector<Vertex>{2});
  // Second seed of the first group of five.
  auto b = relevant_seeds(17, gt, seqs);
  CHECK(b.rule == 'b');
  CHECK(b.seeds == std::vector<Vertex>{16});
  // Last seed of a type-1 group sees all earlier members.
  CHECK(relevant_seeds(7, gt, seqs).seeds == std::vector<Vertex>{4, 5, 6});
  // x_1 of the only block has no predecessors.
  auto c = relevant_seeds(0, gt, seqs);
  CHECK(c.rule == 'c');
  CHECK(c.seeds.empty());
  CHECK(relevant_seeds(12, gt, seqs).seeds == std::vector<Vertex>{0, 4, 8});
  // First seeds of groups 7..12 appear only in y, so nothing is relevant.
  CHECK(relevant_seeds(25, gt, seqs).seeds.empty());
  // The single-seed group falls under the first-seed rule.
  CHECK(relevant_seeds(46, gt, seqs).rule == 'c');
}

TEST_CASE("ordering properties on random padded seed sets") {
  const Ratio betas[] = {{1, 1}, {1, 2}, {1, 3}, {1, 4}};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int m = 50 + static_cast<int>((seed * 211) % 1500);
    auto t = gen_tree(m, seed % 2 ? TreeProfile::caterpillar : TreeProfile::uniform, seed);
    const Ratio beta = betas[seed % 4];
    auto d = cut_tree(t, beta);
    auto padded = pad_seeds(t, d);
    auto o = build_orders(padded.tree, padded.decomposition.seeds);
    auto gt = build_group_tree(o);
    auto seqs = build_sequences(gt);
    auto bad = check_ordering(o, gt, seqs);
    INFO("m=" << m << " beta=" << beta.str() << (bad.empty() ? "" : " " + bad.front()));
    CHECK(bad.empty());
  }
}

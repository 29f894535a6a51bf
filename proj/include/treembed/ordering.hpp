#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/graph.hpp"

namespace treembed {

inline constexpr int kBlockSize = 47;
inline constexpr std::array<int, 12> kSmallGroupSizes{4, 4, 4, 4, 5, 4, 4, 4, 4, 5, 4, 1};

enum class GroupType { type1, type2, untyped };

// Type of the small group at position `slot` (0-based, size order) in a block:
// the second and sixth groups of four are type 1, the other groups of four type 2.
inline GroupType small_group_type(int slot) {
  if (kSmallGroupSizes[slot] != 4) return GroupType::untyped;
  return slot == 1 || slot == 6 ? GroupType::type1 : GroupType::type2;
}

// Exponent j with 47 * 2^j == count, or -1 when count has another form.
inline int block_exponent(std::size_t count) {
  if (count == 0 || count % kBlockSize != 0) return -1;
  std::size_t q = count / kBlockSize;
  int j = 0;
  while (q > 1) {
    if (q & 1U) return -1;
    q >>= 1U;
    ++j;
  }
  return j;
}

struct SeedOrdering {
  std::vector<Vertex> sigma;  // leaf count descending
  std::vector<Vertex> tau;    // preorder
  std::vector<Vertex> rho;    // group-respecting rearrangement
  // Indexed by vertex; -1 for vertices that are not seeds.
  std::vector<int> leaf_count;
  std::vector<int> tau_rank;
  std::vector<int> sigma_rank;
  std::vector<int> rho_rank;
  int j_star = 0;

  bool tau_before(Vertex a, Vertex b) const { return tau_rank[a] < tau_rank[b]; }
};

struct SmallGroup {
  std::vector<Vertex> seeds;  // in rho order
  int slot = 0;               // position 0..11 within its block under sigma
  GroupType type = GroupType::untyped;
};

struct GroupTree {
  int j_star = 0;
  // Blocks of 47 in rho order; each lists its twelve small groups in rho order.
  std::vector<std::vector<SmallGroup>> blocks;
  // Per vertex: block index and group index within the block (rho order).
  std::vector<std::pair<int, int>> group_of;

  // Large group k at level j: the seeds at rho positions [k*47*2^j, (k+1)*47*2^j).
  static std::pair<std::size_t, std::size_t> large_range(int j, std::size_t k) {
    const std::size_t len = static_cast<std::size_t>(kBlockSize) << j;
    return {k * len, (k + 1) * len};
  }
  std::size_t large_count(int j) const { return std::size_t{1} << (j_star - j); }
  const SmallGroup& group_containing(Vertex s) const {
    const auto [b, g] = group_of[s];
    return blocks[b][g];
  }
};

struct SeedSequences {
  std::vector<Vertex> x;
  std::vector<Vertex> y;
};

// Indexed [j][k] for the k-th large group (rho order) of size 47 * 2^j.
using GroupSequences = std::vector<std::vector<SeedSequences>>;

namespace detail {

inline std::vector<int> ranks(const std::vector<Vertex>& order, int n) {
  std::vector<int> rank(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  return rank;
}

}  // namespace detail

inline SeedOrdering build_orders(const RootedTree& t, const std::vector<Vertex>& seeds) {
  const int n = t.size();
  const int j_star = block_exponent(seeds.size());
  if (j_star < 0)
    throw std::invalid_argument("seed count " + std::to_string(seeds.size()) + " is not 47 * 2^j");
  SeedOrdering o;
  o.j_star = j_star;
  std::vector<char> is_seed(static_cast<std::size_t>(n), 0);
  for (Vertex s : seeds) {
    if (s < 0 || s >= n || is_seed[s]) throw std::invalid_argument("bad or repeated seed");
    is_seed[s] = 1;
  }

  o.leaf_count.assign(static_cast<std::size_t>(n), -1);
  for (Vertex s : seeds) {
    int leaves = 0;
    for (Vertex c : t.children(s)) leaves += t.is_leaf(c) && !is_seed[c] ? 1 : 0;
    o.leaf_count[s] = leaves;
  }

  for (Vertex v : t.preorder())
    if (is_seed[v]) o.tau.push_back(v);
  o.tau_rank = detail::ranks(o.tau, n);

  o.sigma = o.tau;
  std::stable_sort(o.sigma.begin(), o.sigma.end(),
                   [&](Vertex a, Vertex b) { return o.leaf_count[a] > o.leaf_count[b]; });
  o.sigma_rank = detail::ranks(o.sigma, n);

  // Stages one and two: sort small groups by tau, then order each block's
  // groups by the tau rank of their first seed.
  std::vector<Vertex> rho;
  rho.reserve(seeds.size());
  for (std::size_t b = 0; b < seeds.size(); b += kBlockSize) {
    std::vector<std::vector<Vertex>> groups;
    std::size_t at = b;
    for (int size : kSmallGroupSizes) {
      std::vector<Vertex> g(o.sigma.begin() + static_cast<std::ptrdiff_t>(at),
                            o.sigma.begin() + static_cast<std::ptrdiff_t>(at + size));
      std::sort(g.begin(), g.end(), [&](Vertex a, Vertex c) { return o.tau_before(a, c); });
      groups.push_back(std::move(g));
      at += size;
    }
    std::stable_sort(groups.begin(), groups.end(), [&](const auto& g1, const auto& g2) {
      return o.tau_before(g1.front(), g2.front());
    });
    for (const auto& g : groups) rho.insert(rho.end(), g.begin(), g.end());
  }

  // Stage three: bottom-up, put the half holding the tau-first seed in front.
  for (int j = 1; j <= j_star; ++j) {
    const std::size_t len = static_cast<std::size_t>(kBlockSize) << j;
    for (std::size_t start = 0; start < rho.size(); start += len) {
      const auto mid = rho.begin() + static_cast<std::ptrdiff_t>(start + len / 2);
      const auto first = rho.begin() + static_cast<std::ptrdiff_t>(start);
      if (o.tau_before(*mid, *first)) std::rotate(first, mid, first + static_cast<std::ptrdiff_t>(len));
    }
  }
  o.rho = std::move(rho);
  o.rho_rank = detail::ranks(o.rho, n);
  return o;
}

inline GroupTree build_group_tree(const SeedOrdering& o) {
  GroupTree gt;
  gt.j_star = o.j_star;
  gt.group_of.assign(o.rho_rank.size(), {-1, -1});
  // Small-group membership comes from sigma; its position from rho.
  std::vector<int> slot_of(o.rho_rank.size(), -1);
  for (std::size_t b = 0; b < o.sigma.size(); b += kBlockSize) {
    std::size_t at = b;
    for (int slot = 0; slot < static_cast<int>(kSmallGroupSizes.size()); ++slot)
      for (int i = 0; i < kSmallGroupSizes[slot]; ++i) slot_of[o.sigma[at++]] = slot;
  }
  for (std::size_t b = 0; b < o.rho.size(); b += kBlockSize) {
    std::vector<SmallGroup> block;
    for (std::size_t i = b; i < b + kBlockSize; ++i) {
      const Vertex s = o.rho[i];
      const int slot = slot_of[s];
      if (block.empty() || block.back().slot != slot ||
          o.sigma_rank[s] / kBlockSize != o.sigma_rank[block.back().seeds.front()] / kBlockSize)
        block.push_back({{}, slot, small_group_type(slot)});
      block.back().seeds.push_back(s);
    }
    const int bi = static_cast<int>(gt.blocks.size());
    for (int g = 0; g < static_cast<int>(block.size()); ++g)
      for (Vertex s : block[g].seeds) gt.group_of[s] = {bi, g};
    gt.blocks.push_back(std::move(block));
  }
  return gt;
}

inline GroupSequences build_sequences(const GroupTree& gt) {
  GroupSequences seqs(static_cast<std::size_t>(gt.j_star + 1));
  for (const auto& block : gt.blocks) {
    SeedSequences s;
    s.y.push_back(block[0].seeds.front());
    for (int g = 0; g < 6; ++g) s.x.push_back(block[g].seeds.front());
    for (int g = 6; g < 12; ++g) s.y.push_back(block[g].seeds.front());
    seqs[0].push_back(std::move(s));
  }
  for (int j = 1; j <= gt.j_star; ++j) {
    const auto& lower = seqs[j - 1];
    for (std::size_t k = 0; k < gt.large_count(j); ++k) {
      const auto& first = lower[2 * k];
      const auto& second = lower[2 * k + 1];
      SeedSequences s;
      s.x.assign(first.y.begin(), first.y.begin() + j + 6);
      s.y.push_back(first.y.front());
      s.y.insert(s.y.end(), second.y.begin(), second.y.end());
      seqs[j].push_back(std::move(s));
    }
  }
  return seqs;
}

struct RelevantSeeds {
  std::vector<Vertex> seeds;
  char rule = 'c';  // which case of the definition produced the set
};

// Positions (level j, group k, index i) at which each seed occurs in the x sequences.
using SequenceIndex = std::map<Vertex, std::vector<std::array<int, 3>>>;

inline SequenceIndex index_sequences(const GroupSequences& seqs) {
  SequenceIndex idx;
  for (int j = 0; j < static_cast<int>(seqs.size()); ++j)
    for (int k = 0; k < static_cast<int>(seqs[j].size()); ++k)
      for (int i = 0; i < static_cast<int>(seqs[j][k].x.size()); ++i)
        idx[seqs[j][k].x[i]].push_back({j, k, i});
  return idx;
}

inline RelevantSeeds relevant_seeds(Vertex s, const GroupTree& gt, const GroupSequences& seqs,
                                    const SequenceIndex& idx) {
  const SmallGroup& g = gt.group_containing(s);
  const auto pos = static_cast<std::size_t>(
      std::find(g.seeds.begin(), g.seeds.end(), s) - g.seeds.begin());
  RelevantSeeds out;
  if (pos == 0) {
    out.rule = 'c';
    const auto it = idx.find(s);
    if (it == idx.end()) return out;
    for (const auto& [j, k, i] : it->second) {
      if (i == 0) continue;
      const auto& x = seqs[j][k].x;
      for (int e = 0; e < i; ++e) out.seeds.push_back(x[e]);
    }
    std::sort(out.seeds.begin(), out.seeds.end());
    out.seeds.erase(std::unique(out.seeds.begin(), out.seeds.end()), out.seeds.end());
    return out;
  }
  if (g.type == GroupType::type2 && pos == 3) {
    out.rule = 'a';
    out.seeds = {g.seeds[2]};
    return out;
  }
  out.rule = 'b';
  out.seeds.assign(g.seeds.begin(), g.seeds.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

inline RelevantSeeds relevant_seeds(Vertex s, const GroupTree& gt, const GroupSequences& seqs) {
  return relevant_seeds(s, gt, seqs, index_sequences(seqs));
}

// Structural audit of an ordering; returns the list of broken properties.
inline std::vector<std::string> check_ordering(const SeedOrdering& o, const GroupTree& gt,
                                               const GroupSequences& seqs) {
  std::vector<std::string> bad;
  auto note = [&](std::string msg) {
    if (bad.size() < 20) bad.push_back(std::move(msg));
  };
  for (std::size_t i = 1; i < o.sigma.size(); ++i)
    if (o.leaf_count[o.sigma[i - 1]] < o.leaf_count[o.sigma[i]]) note("sigma not leaf-descending");
  for (std::size_t b = 0; b < gt.blocks.size(); ++b) {
    const auto& block = gt.blocks[b];
    if (block.size() != kSmallGroupSizes.size()) {
      note("block " + std::to_string(b) + " has " + std::to_string(block.size()) + " groups");
      continue;
    }
    int total = 0;
    std::array<int, 12> seen{};
    int type1 = 0;
    int type2 = 0;
    for (const auto& g : block) {
      total += static_cast<int>(g.seeds.size());
      ++seen[g.slot];
      if (static_cast<int>(g.seeds.size()) != kSmallGroupSizes[g.slot]) note("group size mismatch");
      if (g.type != small_group_type(g.slot)) note("group type mismatch");
      type1 += g.type == GroupType::type1 ? 1 : 0;
      type2 += g.type == GroupType::type2 ? 1 : 0;
      for (std::size_t i = 1; i < g.seeds.size(); ++i)
        if (!o.tau_before(g.seeds[i - 1], g.seeds[i])) note("small group not tau-increasing");
      // Same members as the sigma group.
      for (Vertex s : g.seeds) {
        const int r = o.sigma_rank[s];
        int at = r % kBlockSize;
        int slot = 0;
        while (at >= kSmallGroupSizes[slot]) at -= kSmallGroupSizes[slot++];
        if (slot != g.slot || r / kBlockSize != o.sigma_rank[g.seeds.front()] / kBlockSize)
          note("rho group differs from sigma group");
      }
    }
    if (total != kBlockSize) note("block sizes do not sum to 47");
    if (type1 != 2 || type2 != 7) note("wrong type counts");
    for (int c : seen)
      if (c != 1) note("block misses a small group");
  }
  for (int j = 0; j <= gt.j_star; ++j) {
    if (seqs[j].size() != gt.large_count(j)) note("wrong number of large groups");
    for (std::size_t k = 0; k < seqs[j].size(); ++k) {
      const auto& s = seqs[j][k];
      if (static_cast<int>(s.x.size()) != j + 6 || static_cast<int>(s.y.size()) != j + 7)
        note("sequence lengths wrong at level " + std::to_string(j));
      if (s.x.front() != s.y.front()) note("x_1 differs from y_1");
      for (std::size_t i = 1; i < s.x.size(); ++i)
        if (!o.tau_before(s.x[i - 1], s.x[i])) note("x sequence not tau-increasing");
      const auto [lo, hi] = GroupTree::large_range(j, k);
      for (Vertex v : s.y)
        if (o.rho_rank[v] < static_cast<int>(lo) || o.rho_rank[v] >= static_cast<int>(hi))
          note("sequence leaves its large group");
      Vertex tau_first = o.rho[lo];
      for (std::size_t i = lo; i < hi; ++i)
        if (o.tau_before(o.rho[i], tau_first)) tau_first = o.rho[i];
      if (tau_first != o.rho[lo]) note("large group does not start with its tau-first seed");
    }
  }
  const auto idx = index_sequences(seqs);
  for (Vertex s : o.rho) {
    for (Vertex x : relevant_seeds(s, gt, seqs, idx).seeds)
      if (!o.tau_before(x, s)) note("relevant seed " + std::to_string(x) + " not before " + std::to_string(s));
    // A seed sits at a non-first sequence position for at most one large group.
    if (auto it = idx.find(s); it != idx.end()) {
      int later = 0;
      for (const auto& pos : it->second) later += pos[2] > 0 ? 1 : 0;
      if (later > 1) note("seed " + std::to_string(s) + " is a later x entry of several groups");
    }
  }
  return bad;
}

}  // namespace treembed

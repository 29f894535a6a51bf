#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "treembed/bipartite.hpp"
#include "treembed/blossom.hpp"
#include "treembed/cluster_host.hpp"
#include "treembed/decomposition.hpp"
#include "treembed/fill.hpp"
#include "treembed/matching.hpp"
#include "treembed/ordering.hpp"

namespace treembed {

enum class Family : std::uint8_t { W, V, F1, F2, Z };
inline constexpr int kFamilies = 5;

inline const char* to_string(Family f) {
  switch (f) {
    case Family::W: return "W";
    case Family::V: return "V";
    case Family::F1: return "F1";
    case Family::F2: return "F2";
    case Family::Z: return "Z";
  }
  return "?";
}

enum class SlotStatus : std::uint8_t { free, used, discarded };

// Splits every cluster into consecutive slices W, V (connectors), F1, F2 and Z
// and tracks which host vertices are used or discarded.
class SliceLedger {
 public:
  SliceLedger() = default;
  SliceLedger(const ClusterHost& host, const std::array<int, kFamilies>& sizes, Vertex anchor = kNoVertex)
      : p_(host.p),
        slices_(static_cast<std::size_t>(host.p)),
        family_(static_cast<std::size_t>(host.vertex_count()), Family::Z),
        status_(static_cast<std::size_t>(host.vertex_count()), SlotStatus::free),
        free_(static_cast<std::size_t>(host.p) * kFamilies, 0),
        used_(static_cast<std::size_t>(host.p) * kFamilies, 0),
        discarded_(static_cast<std::size_t>(host.p) * kFamilies, 0) {
    if (std::accumulate(sizes.begin(), sizes.end(), 0) != host.cluster_size)
      throw std::invalid_argument("slice sizes must add up to the cluster size");
    for (int c = 0; c < host.p; ++c) {
      std::vector<Vertex> order(static_cast<std::size_t>(host.cluster_size));
      std::iota(order.begin(), order.end(), host.first_vertex(c));
      if (anchor != kNoVertex && host.cluster_of(anchor) == c) {
        order.erase(std::find(order.begin(), order.end(), anchor));
        order.insert(order.begin(), anchor);
      }
      std::size_t at = 0;
      for (int f = 0; f < kFamilies; ++f) {
        auto& slice = slices_[c][f];
        slice.assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                     order.begin() + static_cast<std::ptrdiff_t>(at + sizes[f]));
        std::sort(slice.begin(), slice.end());
        for (Vertex v : slice) family_[v] = static_cast<Family>(f);
        at += static_cast<std::size_t>(sizes[f]);
        free_[index(c, static_cast<Family>(f))] = sizes[f];
      }
    }
  }

  int clusters() const { return p_; }
  Family family(Vertex v) const { return family_[v]; }
  SlotStatus status(Vertex v) const { return status_[v]; }
  bool is_free(Vertex v) const { return status_[v] == SlotStatus::free; }
  const std::vector<Vertex>& slice(int c, Family f) const { return slices_[c][static_cast<int>(f)]; }
  int capacity(int c, Family f) const { return static_cast<int>(slice(c, f).size()); }
  int free(int c, Family f) const { return free_[index(c, f)]; }
  int used(int c, Family f) const { return used_[index(c, f)]; }
  int discarded(int c, Family f) const { return discarded_[index(c, f)]; }

  std::vector<Vertex> free_vertices(int c, Family f) const {
    std::vector<Vertex> out;
    for (Vertex v : slice(c, f))
      if (is_free(v)) out.push_back(v);
    return out;
  }

  void use(Vertex v, int c) { move(v, c, SlotStatus::free, SlotStatus::used); }
  void release(Vertex v, int c) { move(v, c, SlotStatus::used, SlotStatus::free); }
  void discard(Vertex v, int c) {
    if (family_[v] != Family::F1) throw std::logic_error("only F1 vertices are ever discarded");
    move(v, c, SlotStatus::free, SlotStatus::discarded);
  }

  // used + discarded + free = capacity for every slice, recounted from scratch.
  bool conserved() const {
    for (int c = 0; c < p_; ++c)
      for (int f = 0; f < kFamilies; ++f) {
        int u = 0, d = 0, fr = 0;
        for (Vertex v : slices_[c][f]) {
          u += status_[v] == SlotStatus::used;
          d += status_[v] == SlotStatus::discarded;
          fr += status_[v] == SlotStatus::free;
        }
        const auto i = index(c, static_cast<Family>(f));
        if (u != used_[i] || d != discarded_[i] || fr != free_[i]) return false;
        if (u + d + fr != static_cast<int>(slices_[c][f].size())) return false;
      }
    return true;
  }

 private:
  std::size_t index(int c, Family f) const {
    return static_cast<std::size_t>(c) * kFamilies + static_cast<std::size_t>(f);
  }
  std::vector<int>& counter(SlotStatus s) {
    return s == SlotStatus::free ? free_ : (s == SlotStatus::used ? used_ : discarded_);
  }
  void move(Vertex v, int c, SlotStatus from, SlotStatus to) {
    if (status_[v] != from) throw std::logic_error("slice vertex " + std::to_string(v) + " in unexpected state");
    status_[v] = to;
    const auto i = index(c, family_[v]);
    --counter(from)[i];
    ++counter(to)[i];
  }

  int p_ = 0;
  std::vector<std::array<std::vector<Vertex>, kFamilies>> slices_;
  std::vector<Family> family_;
  std::vector<SlotStatus> status_;
  std::vector<int> free_, used_, discarded_;
};

struct PipelineParams {
  Ratio alpha{3, 10};
  Ratio beta{1, 30};
  Ratio eps{1, 5};
  Ratio xi{1, 30};         // slack of the cluster-level matching structures
  double threshold = 0.3;  // reduced-graph density threshold
  // Shares of the spare room per cluster given to F1 and F2; Z gets the rest.
  double f1_share = 0.4;
  double f2_share = 0.4;
  // Largest spread of free F1 counts left after each seed; 0 equalises exactly,
  // negative means the largest F1 tree size.
  int f1_tolerance = -1;
  // Optionally force the tree's root onto this host vertex.
  Vertex anchor_host = kNoVertex;
  bool audit_every_step = true;
};

struct CertificateEntry {
  int cluster = -1;
  Family family = Family::F1;
  Vertex parent_image = kNoVertex;  // kNoVertex: plain room shortage
  std::vector<Vertex> free_vertices;
  long long demand = 1;
};

// Each entry claims that fewer than `demand` of the listed free vertices are
// usable (adjacent to the parent image when one is given).
struct CapacityCertificate {
  std::string phase;
  std::vector<CertificateEntry> entries;

  bool verify(const Graph& g) const {
    if (entries.empty()) return false;
    for (const auto& e : entries) {
      long long usable = 0;
      for (Vertex v : e.free_vertices)
        usable += e.parent_image == kNoVertex || g.has_edge(v, e.parent_image) ? 1 : 0;
      if (usable >= e.demand) return false;
    }
    return true;
  }
};

struct HallObstruction {
  std::vector<Vertex> seed_set;     // K, tree vertices
  std::vector<Vertex> seed_images;  // phi(K)
  long long leaf_demand = 0;        // |L_K|
  long long neighborhood_size = 0;  // |N(phi(K)) cap Z|

  // Recounts |N(phi(K)) cap Z| from the raw graph.
  bool verify(const Graph& g, std::span<const Vertex> z) const {
    long long n = 0;
    for (Vertex v : z) {
      bool hit = false;
      for (Vertex img : seed_images) hit = hit || g.has_edge(v, img);
      n += hit ? 1 : 0;
    }
    return n == neighborhood_size && n < leaf_demand;
  }
};

enum class FailureKind { hypothesis, capacity, placement, structure, hall };

inline const char* to_string(FailureKind k) {
  switch (k) {
    case FailureKind::hypothesis: return "hypothesis";
    case FailureKind::capacity: return "capacity";
    case FailureKind::placement: return "placement";
    case FailureKind::structure: return "structure";
    case FailureKind::hall: return "hall";
  }
  return "?";
}

struct PipelineFailure {
  FailureKind kind = FailureKind::capacity;
  std::string message;
  std::optional<CapacityCertificate> capacity;
  std::optional<HallObstruction> obstruction;
  std::optional<HallWitness> witness;  // on the cluster graph below
  Graph witness_graph;
  std::vector<char> witness_n;

  // Whether the attached certificate re-verifies against raw adjacency.
  bool certified(const Graph& host, std::span<const Vertex> z) const {
    if (capacity) return capacity->verify(host);
    if (obstruction) return obstruction->verify(host, z);
    if (witness) return witness->verify(witness_graph, witness_n);
    return false;
  }
};

struct SeedRecord {
  Vertex seed = kNoVertex;
  int cluster = -1;
  Vertex image = kNoVertex;
  char relevant_rule = 'c';
  int relevant_embedded = 0;
  bool typicality_relaxed = false;
  long long z_degree = 0;
  bool z_degree_ok = false;  // deg_Z >= (2/3 - eps^(1/3))|Z|
  long long pseudo_used = 0; // u'_s
  bool pseudo_ok = true;     // u'_s <= 600 eps m
  int f1_trees = 0;
  int f2_trees = 0;
};

struct LedgerSnapshot {
  std::string op;
  Vertex seed = kNoVertex;
  bool conserved = true;
  bool balanced = true;
  int max_f2_gap = 0;
  bool f1_equal = true;
  int f1_gap = 0;
};

struct GroupAuditEntry {
  std::string kind;
  std::vector<Vertex> seeds;
  long long neighbourhood = 0;
  double bound = 0;
  bool pass = true;
};

struct GroupAudit {
  std::vector<GroupAuditEntry> entries;
  int skipped_with_padding = 0;
  int failures() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.pass; }));
  }
};

struct PipelineLog {
  std::array<int, kFamilies> slice_sizes{};
  long long host_m = 0;
  int seeds = 0;
  int padded_seeds = 0;
  double balanced_bound = 0;  // beta m
  std::vector<SeedRecord> seed_records;
  std::vector<LedgerSnapshot> snapshots;
  int typical_parent_checks = 0;
  int typical_parent_binding = 0;  // parents whose first candidate vertex was atypical
  int relaxed_placements = 0;
  long long discarded_total = 0;
  GroupAudit audit;
  std::vector<std::pair<std::string, double>> phase_seconds;
};

// State of one pipeline run; owned and mutated by a single caller.
struct EmbeddingState {
  const ClusterHost* host = nullptr;
  const RootedTree* tree = nullptr;
  PipelineParams params;
  TreeDecomposition dec;
  PaddedTree padded;
  SeedOrdering order;
  GroupTree groups;
  GroupSequences seqs;
  SequenceIndex seq_index;
  SliceLedger ledger;
  Embedding phi;
  Graph reduced;
  std::vector<std::pair<int, int>> m_f2;
  std::vector<int> f2_mate;
  std::vector<Vertex> z;
  std::vector<std::vector<int>> f1_at, f2_at, leaves_at;  // micro-tree indices per seed
  std::vector<char> is_real_seed;
  std::vector<int> preorder_index;
  PipelineLog log;

  const Graph& g() const { return host->underlying; }
  int cluster_of(Vertex img) const { return host->cluster_of(img); }
  int p() const { return host->p; }
  bool embedded(Vertex t) const { return phi.contains(t); }
};

namespace detail {

inline double cube_root(Ratio r) { return std::cbrt(r.value()); }

// Number of clusters (other than `own`) whose slice `f` v is atypical to.
inline int atypical_clusters(const EmbeddingState& st, Vertex v, int own, Family f, bool free_only) {
  int bad = 0;
  for (int c = 0; c < st.p(); ++c) {
    if (c == own) continue;
    const double d = st.host->pair_density(own, c);
    if (d <= 0) continue;
    const auto target = free_only ? st.ledger.free_vertices(c, f) : st.ledger.slice(c, f);
    if (target.empty()) continue;
    bad += is_typical(st.g(), v, target, d, st.params.eps) ? 0 : 1;
  }
  return bad;
}

inline int exception_budget(const EmbeddingState& st) {
  return static_cast<int>(st.params.eps.floor_times(st.p()));
}

inline bool typical_parent(const EmbeddingState& st, Vertex img) {
  return atypical_clusters(st, img, st.cluster_of(img), Family::W, false) <= exception_budget(st);
}

inline int max_f2_gap(const EmbeddingState& st) {
  int gap = 0;
  for (auto [a, b] : st.m_f2)
    gap = std::max(gap, std::abs(st.ledger.free(a, Family::F2) - st.ledger.free(b, Family::F2)));
  return gap;
}

inline int f1_gap(const EmbeddingState& st) {
  int lo = std::numeric_limits<int>::max(), hi = 0;
  for (int c = 0; c < st.p(); ++c) {
    lo = std::min(lo, st.ledger.free(c, Family::F1));
    hi = std::max(hi, st.ledger.free(c, Family::F1));
  }
  return hi - lo;
}

inline int f1_tolerance(const EmbeddingState& st) {
  if (st.params.f1_tolerance >= 0) return st.params.f1_tolerance;
  return static_cast<int>((Ratio{1, 1} / st.params.beta).floor_times(1));
}

inline void snapshot(EmbeddingState& st, std::string op, Vertex seed) {
  if (!st.params.audit_every_step) return;
  LedgerSnapshot s;
  s.op = std::move(op);
  s.seed = seed;
  s.conserved = st.ledger.conserved();
  s.max_f2_gap = max_f2_gap(st);
  s.balanced = s.max_f2_gap <= st.log.balanced_bound + 1e-9;
  s.f1_gap = f1_gap(st);
  s.f1_equal = s.f1_gap == 0;
  st.log.snapshots.push_back(std::move(s));
}

inline Vertex first_free_neighbour(const EmbeddingState& st, int cluster, Family f, Vertex parent_image) {
  for (Vertex v : st.ledger.slice(cluster, f))
    if (st.ledger.is_free(v) && (parent_image == kNoVertex || st.g().has_edge(v, parent_image))) return v;
  return kNoVertex;
}

inline CertificateEntry entry_for(const EmbeddingState& st, int cluster, Family f, Vertex parent_image,
                                  long long demand = 1) {
  return {cluster, f, parent_image, st.ledger.free_vertices(cluster, f), demand};
}

inline PipelineFailure capacity_failure(std::string message, CapacityCertificate cert,
                                        FailureKind kind = FailureKind::capacity) {
  PipelineFailure f;
  f.kind = kind;
  f.message = std::move(message);
  f.capacity = std::move(cert);
  return f;
}

// Vertices of a micro-tree in preorder.
inline std::vector<Vertex> micro_order(const EmbeddingState& st, const MicroTree& mt) {
  std::vector<Vertex> vs = mt.vertices;
  std::sort(vs.begin(), vs.end(), [&](Vertex a, Vertex b) { return st.preorder_index[a] < st.preorder_index[b]; });
  return vs;
}

inline int parity(const RootedTree& t, const MicroTree& mt, Vertex v) {
  return (t.depth(v) - t.depth(mt.root)) & 1;
}

inline TreeType micro_type(const RootedTree& t, const MicroTree& mt) {
  int even = 0;
  for (Vertex v : mt.vertices) even += parity(t, mt, v) == 0 ? 1 : 0;
  return make_type(even, mt.size() - even);
}

inline std::optional<PipelineFailure> embed_f2_on(EmbeddingState& st, const MicroTree& mt,
                                                  const std::vector<Vertex>& order, Vertex seed_image,
                                                  int seed_cluster, bool connector_inside,
                                                  std::array<int, 2> side);

}  // namespace detail

struct TargetChoice {
  std::vector<int> clusters;  // passing clusters, smallest id first
  std::vector<std::string> diagnostics;
};

// Clusters that may receive seed s: (alpha) enough of the free W slice sees
// half of Z outside the relevant seeds' neighbourhood, (beta) adjacent to the
// parent's cluster, (gamma) the parent's image is typical to the W slice.
inline TargetChoice choose_target_cluster(const EmbeddingState& st, Vertex s) {
  TargetChoice out;
  const Graph& g = st.g();
  const RelevantSeeds rel = relevant_seeds(s, st.groups, st.seqs, st.seq_index);
  std::vector<char> covered(static_cast<std::size_t>(g.vertex_count()), 0);
  for (Vertex x : rel.seeds) {
    if (!st.is_real_seed[x] || !st.embedded(x)) continue;
    for (Vertex zv : st.z)
      if (g.has_edge(st.phi[x], zv)) covered[zv] = 1;
  }
  std::vector<Vertex> rest;
  for (Vertex zv : st.z)
    if (!covered[zv]) rest.push_back(zv);
  const double need = (0.5 - 3 * detail::cube_root(st.params.eps)) * static_cast<double>(rest.size());
  const Vertex parent = st.tree->parent(s);
  const Vertex parent_image = parent == kNoVertex ? kNoVertex : st.phi[parent];
  for (int c = 0; c < st.p(); ++c) {
    const auto free_w = st.ledger.free_vertices(c, Family::W);
    if (free_w.empty()) {
      out.diagnostics.push_back("cluster " + std::to_string(c) + ": no free W vertex");
      continue;
    }
    if (need > 0) {
      long long low = 0;
      for (Vertex v : free_w) low += g.degree_into(v, rest) < need ? 1 : 0;
      if (!at_most(low, st.params.eps, static_cast<std::int64_t>(free_w.size()))) {
        out.diagnostics.push_back("cluster " + std::to_string(c) + ": (alpha) " + std::to_string(low) +
                                  " low-degree W vertices");
        continue;
      }
    }
    if (parent_image != kNoVertex) {
      const int pc = st.cluster_of(parent_image);
      const double d = st.host->pair_density(c, pc);
      if (c == pc || d < st.params.threshold || d <= 0) {
        out.diagnostics.push_back("cluster " + std::to_string(c) + ": (beta) not adjacent to the parent's cluster");
        continue;
      }
      if (!is_typical(g, parent_image, st.ledger.slice(c, Family::W), d, st.params.eps)) {
        out.diagnostics.push_back("cluster " + std::to_string(c) + ": (gamma) parent image atypical to W slice");
        continue;
      }
    }
    out.clusters.push_back(c);
  }
  return out;
}

struct SeedPlacement {
  Vertex image = kNoVertex;
  // Candidates rejected by (A) and by each of (B)-(E).
  std::array<int, 5> rejected{};
  Vertex relaxed = kNoVertex;  // adjacent candidate with the fewest atypical clusters
  int relaxed_exceptions = 0;
  std::string error;

  bool ok() const { return image != kNoVertex; }
};

inline SeedPlacement place_seed(const EmbeddingState& st, Vertex s, int cluster) {
  SeedPlacement out;
  const Vertex parent = st.tree->parent(s);
  const Vertex parent_image = parent == kNoVertex ? kNoVertex : st.phi[parent];
  const int budget = detail::exception_budget(st);
  int best = std::numeric_limits<int>::max();
  for (Vertex v : st.ledger.free_vertices(cluster, Family::W)) {
    if (parent_image != kNoVertex && !st.g().has_edge(v, parent_image)) {
      ++out.rejected[0];
      continue;
    }
    const std::array<int, 4> bad{detail::atypical_clusters(st, v, cluster, Family::W, false),
                                 detail::atypical_clusters(st, v, cluster, Family::V, false),
                                 detail::atypical_clusters(st, v, cluster, Family::F1, true),
                                 detail::atypical_clusters(st, v, cluster, Family::Z, false)};
    bool pass = true;
    for (int i = 0; i < 4; ++i)
      if (bad[i] > budget) {
        ++out.rejected[i + 1];
        pass = false;
      }
    const int total = bad[0] + bad[1] + bad[2] + bad[3];
    if (total < best) {
      best = total;
      out.relaxed = v;
      out.relaxed_exceptions = total;
    }
    if (pass) {
      out.image = v;
      return out;
    }
  }
  out.error = "no vertex of cluster " + std::to_string(cluster) + " meets (A)-(E): rejected A=" +
              std::to_string(out.rejected[0]) + " B=" + std::to_string(out.rejected[1]) +
              " C=" + std::to_string(out.rejected[2]) + " D=" + std::to_string(out.rejected[3]) +
              " E=" + std::to_string(out.rejected[4]);
  return out;
}

// Embeds one tree from F2 (or F2') hanging from seed s: root into a connector
// slice next to phi(s), body across an edge of M_F2 with the larger colour
// class on the emptier side, a second connector into a connector slice.
inline std::optional<PipelineFailure> embed_f2_tree(EmbeddingState& st, Vertex s, const MicroTree& mt) {
  const RootedTree& t = *st.tree;
  const auto order = detail::micro_order(st, mt);
  long long odd = 0, even = 0;
  for (Vertex v : order) {
    if (v == mt.root) continue;
    (detail::parity(t, mt, v) ? odd : even) += 1;
  }
  const bool connector_inside = mt.two_seeded() && mt.connector != mt.root;
  if (connector_inside) (detail::parity(t, mt, mt.connector) ? odd : even) -= 1;
  const Vertex seed_image = st.phi[s];
  const int seed_cluster = st.cluster_of(seed_image);

  // Candidate matching edges with room for both classes, tightest fit first.
  struct Pick {
    int odd_side = -1, even_side = -1;
    long long room = 0, gap = 0;
  };
  std::vector<Pick> picks;
  CapacityCertificate no_room{"F2 matching edge", {}};
  for (auto [a, b] : st.m_f2) {
    const int fa = st.ledger.free(a, Family::F2);
    const int fb = st.ledger.free(b, Family::F2);
    const int emptier = (fa > fb || (fa == fb && a < b)) ? a : b;
    const int fuller = emptier == a ? b : a;
    const bool odd_larger = odd >= even;
    Pick pk;
    pk.odd_side = odd_larger ? emptier : fuller;
    pk.even_side = odd_larger ? fuller : emptier;
    const long long left_odd = st.ledger.free(pk.odd_side, Family::F2) - odd;
    const long long left_even = st.ledger.free(pk.even_side, Family::F2) - even;
    if (left_odd < 0 || left_even < 0) {
      const int short_side = left_odd < 0 ? pk.odd_side : pk.even_side;
      no_room.entries.push_back(detail::entry_for(st, short_side, Family::F2, kNoVertex, left_odd < 0 ? odd : even));
      continue;
    }
    pk.room = std::min(left_odd, left_even);
    pk.gap = std::llabs(left_odd - left_even);
    picks.push_back(pk);
  }
  if (picks.empty()) {
    if (no_room.entries.empty()) no_room.entries.push_back({-1, Family::F2, kNoVertex, {}, 1});
    return detail::capacity_failure("no M_F2 edge has room for an F2 tree of size " + std::to_string(mt.size()),
                                    std::move(no_room));
  }
  std::stable_sort(picks.begin(), picks.end(), [](const Pick& x, const Pick& y) {
    return x.room != y.room ? x.room < y.room : x.gap < y.gap;
  });

  std::optional<PipelineFailure> last;
  for (const Pick& pick : picks) {
    last = detail::embed_f2_on(st, mt, order, seed_image, seed_cluster, connector_inside,
                               {pick.even_side, pick.odd_side});
    if (!last) return std::nullopt;
  }
  return last;
}

namespace detail {

// One attempt at placing an F2 tree with its colour classes on side[0] and side[1].
inline std::optional<PipelineFailure> embed_f2_on(EmbeddingState& st, const MicroTree& mt,
                                                  const std::vector<Vertex>& order, Vertex seed_image,
                                                  int seed_cluster, bool connector_inside,
                                                  std::array<int, 2> side) {
  const RootedTree& t = *st.tree;
  const Graph& g = st.g();
  std::vector<std::pair<Vertex, int>> taken;  // host vertex, cluster
  auto rollback = [&] {
    for (auto [v, c] : taken) st.ledger.release(v, c);
    for (Vertex v : mt.vertices) st.phi.unassign(v);
  };
  auto take = [&](Vertex tv, Vertex img) {
    const int c = st.cluster_of(img);
    st.ledger.use(img, c);
    taken.emplace_back(img, c);
    st.phi.assign(tv, img);
  };

  // Root: a connector slice of a cluster dense to S(s) and to the odd side.
  {
    CapacityCertificate cert{"F2 root", {}};
    Vertex chosen = kNoVertex;
    std::vector<int> candidates;
    for (int c = 0; c < st.p(); ++c) {
      if (c == seed_cluster) continue;
      const double ds = st.host->pair_density(seed_cluster, c);
      const double dn = c == side[1] ? 0.0 : st.host->pair_density(c, side[1]);
      if (ds < std::max(0.25, st.params.threshold) || dn < st.params.threshold || dn <= 0) continue;
      candidates.push_back(c);
    }
    const bool needs_typical_parent = mt.two_seeded() && mt.connector == mt.root;
    Vertex fallback = kNoVertex;
    if (needs_typical_parent) ++st.log.typical_parent_checks;
    for (int c : candidates) {
      for (Vertex v : st.ledger.slice(c, Family::V)) {
        if (!st.ledger.is_free(v) || !g.has_edge(v, seed_image)) continue;
        if (needs_typical_parent && !detail::typical_parent(st, v)) {
          if (fallback == kNoVertex) fallback = v;
          continue;
        }
        chosen = v;
        break;
      }
      if (chosen != kNoVertex) break;
      cert.entries.push_back(detail::entry_for(st, c, Family::V, seed_image));
    }
    if (chosen == kNoVertex && fallback != kNoVertex) {
      chosen = fallback;
      ++st.log.typical_parent_binding;
      ++st.log.relaxed_placements;
    }
    if (chosen == kNoVertex) {
      if (cert.entries.empty()) cert.entries.push_back({-1, Family::V, seed_image, {}, 1});
      return detail::capacity_failure("no free connector vertex next to the seed image", std::move(cert));
    }
    take(mt.root, chosen);
  }

  for (Vertex v : order) {
    if (v == mt.root) continue;
    const Vertex parent_image = st.phi[t.parent(v)];
    const int cls = detail::parity(t, mt, v);
    Vertex img = kNoVertex;
    CapacityCertificate cert{"F2 body", {}};
    if (connector_inside && v == mt.connector) {
      // Second connector: a connector slice adjacent to the parent's cluster, typical to W slices.
      const int parent_cluster = st.cluster_of(parent_image);
      std::vector<int> clusters{side[cls]};
      for (int c = 0; c < st.p(); ++c)
        if (c != side[cls] && c != parent_cluster && st.host->pair_density(c, parent_cluster) >= st.params.threshold)
          clusters.push_back(c);
      Vertex fallback = kNoVertex;
      for (int c : clusters) {
        if (c == parent_cluster || st.host->pair_density(c, parent_cluster) <= 0) continue;
        // Its children go back to the parent's side, so the cluster must reach it.
        for (Vertex cand : st.ledger.slice(c, Family::V)) {
          if (!st.ledger.is_free(cand) || !g.has_edge(cand, parent_image)) continue;
          if (!detail::typical_parent(st, cand)) {
            if (fallback == kNoVertex) fallback = cand;
            continue;
          }
          img = cand;
          break;
        }
        if (img != kNoVertex) break;
        cert.entries.push_back(detail::entry_for(st, c, Family::V, parent_image));
      }
      ++st.log.typical_parent_checks;
      if (img == kNoVertex && fallback != kNoVertex) {
        img = fallback;
        ++st.log.typical_parent_binding;
        ++st.log.relaxed_placements;
      }
      if (img == kNoVertex) {
        rollback();
        return detail::capacity_failure("no connector vertex for the second seed's parent", std::move(cert));
      }
    } else {
      img = detail::first_free_neighbour(st, side[cls], Family::F2, parent_image);
      if (img == kNoVertex) {
        cert.entries.push_back(detail::entry_for(st, side[cls], Family::F2, parent_image));
        rollback();
        return detail::capacity_failure("F2 slice of cluster " + std::to_string(side[cls]) +
                                    " has no free neighbour of the parent image",
                                std::move(cert));
      }
    }
    take(v, img);
  }
  return std::nullopt;
}

}  // namespace detail

namespace detail {

struct F1Option {
  int root = -1, rest = -1, other = -1, leaf = -1;  // clusters
};

struct F1Context {
  EmbeddingState& st;
  Vertex seed;
  Vertex seed_image;
  std::vector<long long> load;  // vertices placed per cluster for this seed
};

inline Vertex movable_leaf(const EmbeddingState& st, const MicroTree& mt, const std::vector<Vertex>& order) {
  for (Vertex v : order)
    if (v != mt.root && parity(*st.tree, mt, v) == 0 && st.tree->children(v).empty()) return v;
  return kNoVertex;
}

inline std::vector<long long> increments(const F1Context& cx, const TreeType& tt, const F1Option& o) {
  std::vector<long long> inc(static_cast<std::size_t>(cx.st.p()), 0);
  inc[o.root] += 1;
  inc[o.rest] += tt.t1 - 1 - (o.leaf >= 0 ? 1 : 0);
  inc[o.other] += tt.t2;
  if (o.leaf >= 0) inc[o.leaf] += 1;
  return inc;
}

// Places one micro-tree under an option; rolls back and reports on failure.
inline std::optional<CertificateEntry> place_micro(F1Context& cx, const MicroTree& mt, const F1Option& o) {
  EmbeddingState& st = cx.st;
  const auto order = micro_order(st, mt);
  const Vertex leaf = o.leaf >= 0 ? movable_leaf(st, mt, order) : kNoVertex;
  if (o.leaf >= 0 && leaf == kNoVertex) return CertificateEntry{o.leaf, Family::F1, kNoVertex, {}, 1};
  std::vector<std::pair<Vertex, int>> taken;
  for (Vertex v : order) {
    int c = v == mt.root ? o.root : (v == leaf ? o.leaf : (parity(*st.tree, mt, v) == 0 ? o.rest : o.other));
    const Vertex parent_image = v == mt.root ? cx.seed_image : st.phi[st.tree->parent(v)];
    const Vertex img = first_free_neighbour(st, c, Family::F1, parent_image);
    if (img == kNoVertex) {
      auto e = entry_for(st, c, Family::F1, parent_image);
      for (auto [u, uc] : taken) st.ledger.release(u, uc);
      for (Vertex u : mt.vertices) st.phi.unassign(u);
      return e;
    }
    st.ledger.use(img, c);
    taken.emplace_back(img, c);
    st.phi.assign(v, img);
  }
  for (auto [u, uc] : taken) cx.load[uc] += 1;
  return std::nullopt;
}

// Places a tree using the option that least raises the largest load, trying
// the preferred option first when one is given.
inline std::optional<PipelineFailure> place_greedy(F1Context& cx, const MicroTree& mt, const TreeType& tt,
                                                   const std::vector<F1Option>& options,
                                                   const F1Option* preferred = nullptr) {
  CapacityCertificate cert{"F1 placement", {}};
  if (preferred && !place_micro(cx, mt, *preferred)) return std::nullopt;
  std::vector<std::pair<std::pair<long long, long long>, std::size_t>> ranked;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const auto inc = increments(cx, tt, options[i]);
    long long worst = 0, sum = 0;
    bool room = true;
    for (int c = 0; c < cx.st.p(); ++c) {
      if (inc[c] == 0) continue;
      if (cx.st.ledger.free(c, Family::F1) < inc[c]) {
        room = false;
        cert.entries.push_back(entry_for(cx.st, c, Family::F1, kNoVertex, inc[c]));
      }
      // Cumulative load, so earlier seeds' imbalance is evened out too.
      const long long load = cx.st.ledger.capacity(c, Family::F1) - cx.st.ledger.free(c, Family::F1) + inc[c];
      worst = std::max(worst, load);
      sum += load;
    }
    if (room) ranked.push_back({{worst, sum}, i});
  }
  std::sort(ranked.begin(), ranked.end());
  for (const auto& [score, i] : ranked) {
    auto fail = place_micro(cx, mt, options[i]);
    if (!fail) return std::nullopt;
    cert.entries.push_back(std::move(*fail));
  }
  if (cert.entries.empty()) cert.entries.push_back({-1, Family::F1, kNoVertex, {}, 1});
  return capacity_failure("no placement for an F1 tree of type (" + std::to_string(tt.t1) + "," +
                              std::to_string(tt.t2) + ") at seed " + std::to_string(cx.seed),
                          std::move(cert));
}

// Discards free F1 vertices so no listed cluster has more than `target` free.
inline long long equalize(EmbeddingState& st, const std::vector<int>& clusters, int target) {
  long long discarded = 0;
  for (int c : clusters) {
    auto free = st.ledger.free_vertices(c, Family::F1);
    for (std::size_t i = 0; static_cast<int>(free.size() - i) > target; ++i) {
      st.ledger.discard(free[i], c);
      ++discarded;
    }
  }
  return discarded;
}

inline int min_free_f1(const EmbeddingState& st, const std::vector<int>& clusters) {
  int m = std::numeric_limits<int>::max();
  for (int c : clusters) m = std::min(m, st.ledger.free(c, Family::F1));
  return clusters.empty() ? 0 : m;
}

inline F1Option option_from(const RoundPlan& r, const std::vector<int>& slot_cluster) {
  return {slot_cluster[r.root], slot_cluster[r.rest], slot_cluster[r.other], r.leaf >= 0 ? slot_cluster[r.leaf] : -1};
}

}  // namespace detail

// Embeds the F1 trees hanging from s: cluster-level structures around the
// clusters where phi(s) is typical, balanced trees on the matching, unbalanced
// trees on out-good paths in full fill batches, near-balanced trees on in-good
// paths, leftovers least-loaded first, then discards to equalise every F1 slice.
inline std::optional<PipelineFailure> embed_f1_trees(EmbeddingState& st, Vertex s, const std::vector<int>& trees,
                                                     long long& pseudo_used) {
  pseudo_used = 0;
  if (trees.empty()) return std::nullopt;
  const RootedTree& t = *st.tree;
  const Vertex seed_image = st.phi[s];
  const int own = st.cluster_of(seed_image);

  // Cluster graph without S(s); N = clusters where phi(s) is typical to the free F1 slice.
  std::vector<int> cluster_at;
  for (int c = 0; c < st.p(); ++c)
    if (c != own) cluster_at.push_back(c);
  const int pp = static_cast<int>(cluster_at.size());
  Graph h(pp);
  for (int i = 0; i < pp; ++i)
    for (int j = i + 1; j < pp; ++j)
      if (st.host->pair_density(cluster_at[i], cluster_at[j]) >= st.params.threshold &&
          st.host->pair_density(cluster_at[i], cluster_at[j]) > 0)
        h.add_edge(i, j);
  std::vector<Vertex> n_set;
  for (int i = 0; i < pp; ++i) {
    const int c = cluster_at[i];
    const double d = st.host->pair_density(own, c);
    const auto free = st.ledger.free_vertices(c, Family::F1);
    if (d < st.params.threshold || d <= 0 || free.empty()) continue;
    if (is_typical(st.g(), seed_image, free, d, st.params.eps)) n_set.push_back(i);
  }
  MatchOptions relaxed;
  relaxed.relaxed = true;
  const StructuresResult sr = good_structures(h, n_set, st.params.xi, relaxed);
  if (!sr.ok()) {
    PipelineFailure f;
    f.kind = FailureKind::structure;
    f.message = "matching structures failed at seed " + std::to_string(s) + ": " + sr.failure;
    f.witness = sr.witness;
    f.witness_graph = h;
    f.witness_n = detail::membership(pp, n_set);
    return f;
  }
  const GoodStructures& gs = *sr.structures;
  const auto in_n = detail::membership(pp, n_set);
  std::vector<char> excluded(static_cast<std::size_t>(pp), 0);
  for (Vertex x : gs.excluded) excluded[x] = 1;
  std::vector<int> q_clusters;
  for (int i = 0; i < pp; ++i)
    if (!excluded[i]) q_clusters.push_back(cluster_at[i]);

  detail::F1Context cx{st, s, seed_image, std::vector<long long>(static_cast<std::size_t>(st.p()), 0)};

  // Group trees by type.
  std::map<std::pair<int, int>, std::vector<int>> by_type;
  for (int idx : trees) {
    const TreeType tt = detail::micro_type(t, st.dec.F1[idx]);
    by_type[{tt.t1, tt.t2}].push_back(idx);
  }
  const int tolerance = detail::f1_tolerance(st);
  auto finish_phase = [&] {
    pseudo_used += detail::equalize(st, q_clusters, detail::min_free_f1(st, q_clusters) + tolerance);
  };

  // Phase 1: balanced trees on the matching, roots on the N side.
  std::vector<detail::F1Option> bal_options;
  for (auto [a, b] : gs.matching) {
    if (in_n[a]) bal_options.push_back({cluster_at[a], cluster_at[a], cluster_at[b], -1});
    if (in_n[b]) bal_options.push_back({cluster_at[b], cluster_at[b], cluster_at[a], -1});
  }
  for (const auto& [key, list] : by_type) {
    const TreeType tt = make_type(key.first, key.second);
    if (tt.category != Category::Bal) continue;
    for (int idx : list)
      if (auto f = detail::place_greedy(cx, st.dec.F1[idx], tt, bal_options)) return f;
  }
  finish_phase();

  // Phase 2: unbalanced trees on the out-good partition.
  auto shape_slots = [&](const std::vector<Vertex>& path) {
    std::vector<int> slots;
    for (Vertex v : path) slots.push_back(cluster_at[v]);
    return slots;
  };
  long long m1 = 0, m2 = 0, m3 = 0;
  for (const auto& path : gs.out_good.paths) (path.size() == 2 ? m1 : path.size() == 4 ? m2 : m3) += 1;
  for (const auto& [key, list] : by_type) {
    const TreeType tt = make_type(key.first, key.second);
    if (tt.category != Category::Unbal) continue;
    std::vector<detail::F1Option> options;
    for (const auto& path : gs.out_good.paths) {
      const auto slots = shape_slots(path);
      const FillSchedule unit = path.size() == 2 ? schedule_m1(tt) : path.size() == 4 ? schedule_m2(tt) : schedule_m3(tt);
      for (const auto& r : unit.rounds)
        if (r.count > 0) options.push_back(detail::option_from(r, slots));
    }
    std::size_t next = 0;
    const long long batch = batch_size(tt, m1, m2, m3);
    while (batch > 0 && static_cast<long long>(list.size() - next) >= batch) {
      const BatchPlan plan = batch_plan(tt);
      for (const auto& path : gs.out_good.paths) {
        const auto slots = shape_slots(path);
        const FillSchedule sch = path.size() == 2 ? schedule_m1(tt, plan.h_m1)
                                 : path.size() == 4 ? schedule_m2(tt, plan.h_m2)
                                                    : schedule_m3(tt, plan.h_m3);
        for (const auto& r : sch.rounds) {
          const auto o = detail::option_from(r, slots);
          for (long long k = 0; k < r.count; ++k)
            if (auto f = detail::place_greedy(cx, st.dec.F1[list[next++]], tt, options, &o)) return f;
        }
      }
    }
    for (; next < list.size(); ++next)
      if (auto f = detail::place_greedy(cx, st.dec.F1[list[next]], tt, options)) return f;
  }
  finish_phase();

  // Phase 3: near-balanced trees on the in-good partition.
  for (const auto& [key, list] : by_type) {
    const TreeType tt = make_type(key.first, key.second);
    if (tt.category != Category::NearBal) continue;
    std::vector<detail::F1Option> options;
    std::vector<std::pair<FillSchedule, std::vector<int>>> units;
    long long per_round = 0;
    for (const auto& path : gs.in_good.paths) {
      units.emplace_back(schedule_nearbal(tt, static_cast<int>(path.size())), shape_slots(path));
      per_round += units.back().first.trees_consumed;
      for (const auto& r : units.back().first.rounds) options.push_back(detail::option_from(r, units.back().second));
    }
    std::size_t next = 0;
    while (per_round > 0 && static_cast<long long>(list.size() - next) >= per_round)
      for (const auto& [sch, slots] : units)
        for (const auto& r : sch.rounds) {
          const auto o = detail::option_from(r, slots);
          for (long long k = 0; k < r.count; ++k)
            if (auto f = detail::place_greedy(cx, st.dec.F1[list[next++]], tt, options, &o)) return f;
        }
    for (; next < list.size(); ++next)
      if (auto f = detail::place_greedy(cx, st.dec.F1[list[next]], tt, options)) return f;
  }
  finish_phase();

  // Clean-up: every cluster, including S(s) and the excluded ones, within the tolerance.
  std::vector<int> all(static_cast<std::size_t>(st.p()));
  std::iota(all.begin(), all.end(), 0);
  pseudo_used += detail::equalize(st, all, detail::min_free_f1(st, all) + tolerance);
  return std::nullopt;
}

struct LeafResult {
  std::optional<HallObstruction> obstruction;
  int matched = 0;
};

// Matches every leaf hanging from a seed to a free Z vertex adjacent to its
// seed's image; otherwise extracts the seeds reached by the last failed search.
inline LeafResult hall_finish_leaves(EmbeddingState& st) {
  LeafResult out;
  std::vector<Vertex> leaves, parents;
  for (const auto& mt : st.dec.L) {
    leaves.push_back(mt.root);
    parents.push_back(mt.parent_seed);
  }
  std::vector<int> z_index(static_cast<std::size_t>(st.g().vertex_count()), -1);
  std::vector<Vertex> z_free;
  for (Vertex v : st.z)
    if (st.ledger.is_free(v)) {
      z_index[v] = static_cast<int>(z_free.size());
      z_free.push_back(v);
    }
  BipartiteMatcher bip(static_cast<int>(leaves.size()), static_cast<int>(z_free.size()));
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const Vertex img = st.phi[parents[i]];
    for (Vertex u : st.g().neighbors(img))
      if (z_index[u] >= 0) bip.add_edge(static_cast<int>(i), z_index[u]);
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto& adj = const_cast<std::vector<int>&>(bip.neighbours(static_cast<int>(i)));
    std::sort(adj.begin(), adj.end());
  }
  out.matched = bip.solve();
  if (out.matched == static_cast<int>(leaves.size())) {
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const Vertex img = z_free[bip.left_match(static_cast<int>(i))];
      st.ledger.use(img, st.cluster_of(img));
      st.phi.assign(leaves[i], img);
    }
    return out;
  }
  // Alternating search from the first unmatched leaf.
  int start = 0;
  while (bip.left_match(start) != -1) ++start;
  std::vector<char> seen_left(leaves.size(), 0), seen_right(z_free.size(), 0);
  std::vector<int> stack{start};
  seen_left[start] = 1;
  while (!stack.empty()) {
    const int l = stack.back();
    stack.pop_back();
    for (int r : bip.neighbours(l)) {
      if (seen_right[r]) continue;
      seen_right[r] = 1;
      const int next = bip.right_match(r);
      if (next != -1 && !seen_left[next]) {
        seen_left[next] = 1;
        stack.push_back(next);
      }
    }
  }
  HallObstruction ob;
  for (std::size_t i = 0; i < leaves.size(); ++i)
    if (seen_left[i]) ob.seed_set.push_back(parents[i]);
  std::sort(ob.seed_set.begin(), ob.seed_set.end());
  ob.seed_set.erase(std::unique(ob.seed_set.begin(), ob.seed_set.end()), ob.seed_set.end());
  for (Vertex k : ob.seed_set) ob.seed_images.push_back(st.phi[k]);
  for (Vertex p : parents) ob.leaf_demand += std::binary_search(ob.seed_set.begin(), ob.seed_set.end(), p) ? 1 : 0;
  for (Vertex v : z_free) {
    bool hit = false;
    for (Vertex img : ob.seed_images) hit = hit || st.g().has_edge(v, img);
    ob.neighborhood_size += hit ? 1 : 0;
  }
  out.obstruction = std::move(ob);
  return out;
}

// Joint Z-neighbourhoods of seed groups against the bounds they are meant to reach.
inline GroupAudit group_neighborhood_audit(const EmbeddingState& st) {
  GroupAudit audit;
  const double root4 = std::pow(st.params.eps.value(), 0.25);
  const double zsize = static_cast<double>(st.z.size());
  auto neighbourhood = [&](const std::vector<Vertex>& seeds) {
    long long n = 0;
    for (Vertex v : st.z) {
      bool hit = false;
      for (Vertex s : seeds) hit = hit || st.g().has_edge(v, st.phi[s]);
      n += hit ? 1 : 0;
    }
    return n;
  };
  auto complete = [&](const std::vector<Vertex>& seeds) {
    for (Vertex s : seeds)
      if (!st.is_real_seed[s] || !st.embedded(s)) return false;
    return true;
  };
  auto add = [&](std::string kind, std::vector<Vertex> seeds, double factor) {
    GroupAuditEntry e;
    e.kind = std::move(kind);
    e.neighbourhood = neighbourhood(seeds);
    e.bound = (factor - root4) * zsize;
    e.pass = static_cast<double>(e.neighbourhood) >= e.bound - 1e-9;
    e.seeds = std::move(seeds);
    audit.entries.push_back(std::move(e));
  };
  for (const auto& block : st.groups.blocks)
    for (const auto& grp : block) {
      if (grp.seeds.size() < 4) continue;
      if (!complete(grp.seeds)) {
        ++audit.skipped_with_padding;
        continue;
      }
      if (grp.seeds.size() == 5) {
        add("size-5", grp.seeds, 47.0 / 48);
      } else if (grp.type == GroupType::type1) {
        add("type-1", grp.seeds, 23.0 / 24);
      } else {
        add("type-2", grp.seeds, 11.0 / 12);
        auto by_sigma = grp.seeds;
        std::sort(by_sigma.begin(), by_sigma.end(),
                  [&](Vertex a, Vertex b) { return st.order.sigma_rank[a] < st.order.sigma_rank[b]; });
        add("type-2 pair", {by_sigma[0], by_sigma[1]}, 5.0 / 6);
        add("type-2 pair", {by_sigma[2], by_sigma[3]}, 5.0 / 6);
      }
    }
  for (std::size_t j = 0; j < st.seqs.size(); ++j)
    for (const auto& sq : st.seqs[j]) {
      if (!complete(sq.x)) {
        ++audit.skipped_with_padding;
        continue;
      }
      add("large j=" + std::to_string(j), sq.x, 1.0 - 1.0 / (96.0 * static_cast<double>(1 << j)));
    }
  return audit;
}

struct ObstructionReport {
  std::vector<std::string> cited;
  bool singleton_deficit = false;
  bool demand_within_bound = true;  // |L_K| <= 5/8 (|L| + alpha m)
};

// Which group containments a Hall obstruction exhibits.
inline ObstructionReport obstruction_analysis(const HallObstruction& k, const GroupTree& groups, const GroupSequences& seqs,
                                        long long total_leaves, Ratio alpha, long long m) {
  ObstructionReport r;
  auto inside = [&](Vertex s) { return std::binary_search(k.seed_set.begin(), k.seed_set.end(), s); };
  auto count_in = [&](const std::vector<Vertex>& vs) {
    return static_cast<int>(std::count_if(vs.begin(), vs.end(), inside));
  };
  for (std::size_t j = 1; j < seqs.size(); ++j)
    for (std::size_t g = 0; g < groups.large_count(static_cast<int>(j)); ++g) {
      const auto [lo, hi] = GroupTree::large_range(static_cast<int>(j), g);
      std::vector<Vertex> members;
      for (std::size_t b = lo / kBlockSize; b < hi / kBlockSize; ++b)
        for (const auto& grp : groups.blocks[b]) members.insert(members.end(), grp.seeds.begin(), grp.seeds.end());
      if (count_in(members) == static_cast<int>(members.size())) r.cited.push_back("large group contained in K");
    }
  for (const auto& block : groups.blocks) {
    std::vector<Vertex> all;
    for (const auto& grp : block) all.insert(all.end(), grp.seeds.begin(), grp.seeds.end());
    if (count_in(all) == static_cast<int>(all.size())) r.cited.push_back("large group contained in K");
    for (const auto& grp : block) {
      const int in = count_in(grp.seeds);
      if (grp.seeds.size() == 5 && in == 5) r.cited.push_back("size-5 group contained in K");
      if (grp.seeds.size() == 4 && grp.type == GroupType::type1 && in == 4)
        r.cited.push_back("type-1 group contained in K");
      if (grp.seeds.size() == 4 && grp.type == GroupType::type2 && in >= 3)
        r.cited.push_back("type-2 group meets K in three or more seeds");
    }
  }
  std::sort(r.cited.begin(), r.cited.end());
  r.cited.erase(std::unique(r.cited.begin(), r.cited.end()), r.cited.end());
  r.singleton_deficit = r.cited.empty() && k.seed_set.size() == 1;
  // |L_K| * 8 <= 5 (|L| + alpha m)
  const Ratio bound = Ratio{5, 8} * (Ratio{total_leaves, 1} + alpha * Ratio{m, 1});
  r.demand_within_bound = at_most(k.leaf_demand, bound);
  return r;
}

struct PipelineResult {
  Embedding phi;
  std::optional<PipelineFailure> failure;
  PipelineLog log;
  std::vector<Vertex> z;
  Verdict verdict = Verdict::fail("not run");

  bool ok() const { return !failure && verdict.ok; }
};

namespace detail {

inline std::array<int, kFamilies> slice_sizes(const ClusterHost& host, const RootedTree& t,
                                              const TreeDecomposition& d, const PipelineParams& pr,
                                              long long& spare) {
  const int p = host.p;
  long long connectors = 0;
  long long f2_body = 0;
  long long f2_class = 0;  // largest colour class of one F2 body
  for (const auto& mt : d.F2) {
    connectors += mt.two_seeded() && mt.connector != mt.root ? 2 : 1;
    f2_body += mt.size() - (mt.two_seeded() && mt.connector != mt.root ? 2 : 1);
    long long cls[2] = {0, 0};
    for (Vertex v : mt.vertices)
      if (v != mt.root) ++cls[(t.depth(v) - t.depth(mt.root)) & 1];
    f2_class = std::max({f2_class, cls[0], cls[1]});
  }
  auto per = [&](long long total) { return static_cast<int>((total + p - 1) / p); };
  std::array<int, kFamilies> s{};
  s[0] = per(static_cast<long long>(d.seeds.size())) + 1;
  s[1] = per(connectors) + 1;
  s[2] = per(d.f1_volume());
  s[3] = std::max<int>(per(f2_body), static_cast<int>(f2_class));
  s[4] = per(static_cast<long long>(d.L.size()));
  spare = host.cluster_size - (s[0] + s[1] + s[2] + s[3] + s[4]);
  if (spare < 0) return s;
  const int f1_extra = static_cast<int>(std::floor(pr.f1_share * static_cast<double>(spare)));
  const int f2_extra = static_cast<int>(std::floor(pr.f2_share * static_cast<double>(spare)));
  s[2] += f1_extra;
  s[3] += f2_extra;
  s[4] = host.cluster_size - (s[0] + s[1] + s[2] + s[3]);
  return s;
}

}  // namespace detail

// Embeds t into the cluster host in the order s1, trees at s1, s2, ..., leaves.
inline PipelineResult run_pipeline(const ClusterHost& host, const RootedTree& t, const PipelineParams& params) {
  PipelineResult res;
  EmbeddingState st;
  st.host = &host;
  st.tree = &t;
  st.params = params;
  const long long m = host.vertex_count() - 1;
  st.log.host_m = m;
  auto clock = std::chrono::steady_clock::now();
  auto lap = [&](const char* phase) {
    const auto now = std::chrono::steady_clock::now();
    st.log.phase_seconds.emplace_back(phase, std::chrono::duration<double>(now - clock).count());
    clock = now;
  };
  auto fail = [&](PipelineFailure f) {
    lap("failed");
    res.failure = std::move(f);
    res.phi = st.phi;
    res.log = std::move(st.log);
    res.z = st.z;
    res.verdict = Verdict::fail(res.failure->message);
    return res;
  };
  auto hypothesis = [&](std::string why) {
    PipelineFailure f;
    f.kind = FailureKind::hypothesis;
    f.message = std::move(why);
    return fail(std::move(f));
  };

  // Hypotheses: at most (1 - alpha) m edges, no vertex with more than alpha m leaves.
  if (!at_most(t.edge_count(), Ratio{1, 1} - params.alpha, m))
    return hypothesis("tree has more than (1 - alpha) m edges");
  for (Vertex v = 0; v < t.size(); ++v) {
    long long leaves = 0;
    for (Vertex c : t.children(v)) leaves += t.is_leaf(c) ? 1 : 0;
    if (t.parent(v) != kNoVertex && t.is_leaf(t.parent(v))) ++leaves;
    if (!at_most(leaves, params.alpha, m)) return hypothesis("vertex " + std::to_string(v) + " has more than alpha m leaves");
  }
  if (params.anchor_host != kNoVertex && (params.anchor_host < 0 || params.anchor_host >= host.vertex_count()))
    return hypothesis("anchor vertex outside the host");

  st.phi = Embedding(t.size());
  st.preorder_index.assign(static_cast<std::size_t>(t.size()), 0);
  for (std::size_t i = 0; i < t.preorder().size(); ++i) st.preorder_index[t.preorder()[i]] = static_cast<int>(i);

  st.dec = cut_tree(t, params.beta);
  st.padded = pad_seeds(t, st.dec);
  st.order = build_orders(st.padded.tree, st.padded.decomposition.seeds);
  st.groups = build_group_tree(st.order);
  st.seqs = build_sequences(st.groups);
  st.seq_index = index_sequences(st.seqs);
  st.is_real_seed.assign(static_cast<std::size_t>(st.padded.tree.size()), 0);
  for (Vertex s : st.dec.seeds) st.is_real_seed[s] = 1;
  st.log.seeds = static_cast<int>(st.dec.seeds.size());
  st.log.padded_seeds = static_cast<int>(st.padded.decomposition.seeds.size());
  st.log.balanced_bound = params.beta.value() * static_cast<double>(m);

  long long spare = 0;
  const auto sizes = detail::slice_sizes(host, t, st.dec, params, spare);
  st.log.slice_sizes = sizes;
  if (spare < 0) {
    CapacityCertificate cert{"slice sizing", {{-1, Family::Z, kNoVertex, {}, -spare}}};
    return fail(detail::capacity_failure("clusters too small for the slices this tree needs", std::move(cert)));
  }
  st.ledger = SliceLedger(host, sizes, params.anchor_host);
  for (int c = 0; c < host.p; ++c)
    for (Vertex v : st.ledger.slice(c, Family::Z)) st.z.push_back(v);
  std::sort(st.z.begin(), st.z.end());

  st.reduced = host.reduced(params.threshold);
  {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(host.p));
    for (int c = 0; c < host.p; ++c)
      for (Vertex u : st.reduced.neighbors(c)) adj[c].push_back(u);
    for (auto& a : adj) std::sort(a.begin(), a.end());
    GeneralMatcher gm(adj);
    gm.maximize();
    st.f2_mate = gm.mates();
    for (int c = 0; c < host.p; ++c)
      if (st.f2_mate[c] > c) st.m_f2.emplace_back(c, st.f2_mate[c]);
  }

  st.f1_at.assign(static_cast<std::size_t>(t.size()), {});
  st.f2_at.assign(static_cast<std::size_t>(t.size()), {});
  for (std::size_t i = 0; i < st.dec.F1.size(); ++i) st.f1_at[st.dec.F1[i].parent_seed].push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < st.dec.F2.size(); ++i) st.f2_at[st.dec.F2[i].parent_seed].push_back(static_cast<int>(i));
  detail::snapshot(st, "slices", kNoVertex);
  lap("setup");

  const double z_need = (2.0 / 3 - detail::cube_root(params.eps)) * static_cast<double>(st.z.size());
  for (Vertex s : st.order.tau) {
    if (!st.is_real_seed[s]) continue;
    SeedRecord rec;
    rec.seed = s;
    const RelevantSeeds rel = relevant_seeds(s, st.groups, st.seqs, st.seq_index);
    rec.relevant_rule = rel.rule;
    for (Vertex x : rel.seeds) rec.relevant_embedded += st.is_real_seed[x] && st.embedded(x) ? 1 : 0;

    Vertex image = kNoVertex;
    if (s == t.root() && params.anchor_host != kNoVertex) {
      image = params.anchor_host;
    } else {
      const TargetChoice choice = choose_target_cluster(st, s);
      for (int c : choice.clusters) {
        const SeedPlacement sp = place_seed(st, s, c);
        if (sp.ok()) {
          image = sp.image;
          break;
        }
      }
      if (image == kNoVertex) {
        // Fall back to the adjacent candidate with the fewest atypical clusters anywhere.
        int best = std::numeric_limits<int>::max();
        CapacityCertificate cert{"seed placement", {}};
        const Vertex parent_image = t.parent(s) == kNoVertex ? kNoVertex : st.phi[t.parent(s)];
        for (int c = 0; c < host.p; ++c) {
          const SeedPlacement sp = place_seed(st, s, c);
          if (sp.relaxed != kNoVertex && sp.relaxed_exceptions < best) {
            best = sp.relaxed_exceptions;
            image = sp.relaxed;
          }
          cert.entries.push_back(detail::entry_for(st, c, Family::W, parent_image));
        }
        if (image == kNoVertex)
          return fail(detail::capacity_failure("no free W vertex adjacent to the parent of seed " + std::to_string(s),
                                               std::move(cert), FailureKind::placement));
        rec.typicality_relaxed = true;
        ++st.log.relaxed_placements;
      }
    }
    const int c = st.cluster_of(image);
    st.ledger.use(image, c);
    st.phi.assign(s, image);
    rec.cluster = c;
    rec.image = image;
    rec.z_degree = st.g().degree_into(image, st.z);
    rec.z_degree_ok = static_cast<double>(rec.z_degree) >= z_need - 1e-9;
    bool has_seed_child = false;
    for (Vertex ch : t.children(s)) has_seed_child = has_seed_child || st.is_real_seed[ch];
    if (has_seed_child) {
      ++st.log.typical_parent_checks;
      if (!detail::typical_parent(st, image)) ++st.log.typical_parent_binding;
    }
    detail::snapshot(st, "seed", s);

    for (int idx : st.f2_at[s]) {
      if (auto f = embed_f2_tree(st, s, st.dec.F2[idx])) return fail(std::move(*f));
      ++rec.f2_trees;
      detail::snapshot(st, "f2", s);
    }
    long long pseudo = 0;
    if (auto f = embed_f1_trees(st, s, st.f1_at[s], pseudo)) return fail(std::move(*f));
    rec.f1_trees = static_cast<int>(st.f1_at[s].size());
    rec.pseudo_used = pseudo;
    rec.pseudo_ok = at_most(pseudo, params.eps * Ratio{600, 1}, m);
    st.log.discarded_total += pseudo;
    detail::snapshot(st, "f1", s);
    st.log.seed_records.push_back(rec);
  }

  lap("seeds");
  st.log.audit = group_neighborhood_audit(st);
  lap("audit");
  const LeafResult leaves = hall_finish_leaves(st);
  detail::snapshot(st, "leaves", kNoVertex);
  lap("leaves");
  if (leaves.obstruction) {
    PipelineFailure f;
    f.kind = FailureKind::hall;
    f.message = "leaf demand of " + std::to_string(leaves.obstruction->leaf_demand) + " exceeds the " +
                std::to_string(leaves.obstruction->neighborhood_size) + " Z vertices next to " +
                std::to_string(leaves.obstruction->seed_set.size()) + " seeds";
    f.obstruction = leaves.obstruction;
    return fail(std::move(f));
  }
  res.phi = st.phi;
  res.verdict = verify_embedding(host.underlying, t, st.phi, true);
  if (params.anchor_host != kNoVertex && res.verdict.ok && st.phi[t.root()] != params.anchor_host)
    res.verdict = Verdict::fail("root not mapped to the anchor vertex");
  lap("verify");
  res.log = std::move(st.log);
  res.z = st.z;
  return res;
}

}  // namespace treembed

#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treembed/decomposition.hpp"

namespace treembed {

enum class FillShape { m1_edge, m2_path4, m3_path6, mod_out_branch, mod_in_branch, nearbal_2, nearbal_4, nearbal_6 };

inline const char* to_string(FillShape s) {
  switch (s) {
    case FillShape::m1_edge: return "M1-edge";
    case FillShape::m2_path4: return "M2-path4";
    case FillShape::m3_path6: return "M3-path6";
    case FillShape::mod_out_branch: return "mod-out-branch";
    case FillShape::mod_in_branch: return "mod-in-branch";
    case FillShape::nearbal_2: return "nearbal-2";
    case FillShape::nearbal_4: return "nearbal-4";
    case FillShape::nearbal_6: return "nearbal-6";
  }
  return "?";
}

// Slot layout of each shape. Paths use slots 0..k-1 in order (A, B, C, ...);
// branching shapes use the order A, A', B, B', C, D, E, E', F, F'.
struct ShapeLayout {
  int slots = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> n_slots;  // slots that lie in N, where roots must go
};

inline ShapeLayout shape_layout(FillShape s) {
  auto path = [](int k, std::vector<int> n) {
    ShapeLayout l;
    l.slots = k;
    for (int i = 1; i < k; ++i) l.edges.emplace_back(i - 1, i);
    l.n_slots = std::move(n);
    return l;
  };
  // A=0 A'=1 B=2 B'=3 C=4 D=5 E=6 E'=7 F=8 F'=9
  const std::vector<std::pair<int, int>> branch{{0, 2}, {1, 3}, {2, 4}, {3, 4}, {4, 5},
                                                {5, 6}, {5, 7}, {6, 8}, {7, 9}};
  switch (s) {
    case FillShape::m1_edge: return path(2, {0, 1});
    case FillShape::m2_path4: return path(4, {1, 2});
    case FillShape::m3_path6: return path(6, {1, 2, 3, 4});
    case FillShape::nearbal_2: return path(2, {0, 1});
    case FillShape::nearbal_4: return path(4, {0, 3});
    case FillShape::nearbal_6: return path(6, {0, 2, 3, 5});
    case FillShape::mod_out_branch: return {10, branch, {2, 3, 4, 5, 6, 7}};
    case FillShape::mod_in_branch: return {10, branch, {0, 1, 4, 5, 8, 9}};
  }
  return {};
}

// One kind of round: where a copy of the tree goes. The root goes to `root`,
// the rest of the root's colour class to `rest`, the other class to `other`.
// When `leaf` is set, one leaf of the root's class is moved there instead.
struct RoundPlan {
  std::string label;
  long long count = 0;
  int root = 0;
  int rest = 0;
  int other = 0;
  int leaf = -1;
};

struct FillSchedule {
  TreeType type;
  FillShape shape = FillShape::m1_edge;
  std::vector<RoundPlan> rounds;
  long long per_cluster_fill = 0;
  long long trees_consumed = 0;
};

struct Simulation {
  std::vector<long long> fill;  // per slot
  long long trees = 0;
  std::string error;  // first structural problem, empty when the plan is realisable

  bool balanced() const {
    for (long long f : fill)
      if (f != fill.front()) return false;
    return true;
  }
};

// Replays a schedule slot by slot and checks that every round is realisable
// on the shape: root in N, root adjacent to the other class, the rest of the
// root class adjacent to the other class, a moved leaf adjacent to it too.
inline Simulation simulate(const FillSchedule& s) {
  const ShapeLayout layout = shape_layout(s.shape);
  Simulation sim;
  sim.fill.assign(static_cast<std::size_t>(layout.slots), 0);
  auto adjacent = [&](int a, int b) {
    for (auto [u, v] : layout.edges)
      if ((u == a && v == b) || (u == b && v == a)) return true;
    return false;
  };
  auto fail = [&](const RoundPlan& r, const std::string& why) {
    if (sim.error.empty()) sim.error = "round " + r.label + ": " + why;
  };
  const long long t1 = s.type.t1;
  const long long t2 = s.type.t2;
  for (const RoundPlan& r : s.rounds) {
    if (r.count < 0) fail(r, "negative round count " + std::to_string(r.count));
    if (std::find(layout.n_slots.begin(), layout.n_slots.end(), r.root) == layout.n_slots.end())
      fail(r, "root slot outside N");
    if (t2 > 0 && !adjacent(r.root, r.other)) fail(r, "root not adjacent to the other class");
    const long long rest = t1 - 1 - (r.leaf >= 0 ? 1 : 0);
    if (rest > 0 && t2 > 0 && !adjacent(r.rest, r.other)) fail(r, "root class not adjacent to the other class");
    if (r.leaf >= 0 && !adjacent(r.leaf, r.other)) fail(r, "moved leaf not adjacent to its parent's slot");
    sim.fill[r.root] += r.count;
    sim.fill[r.rest] += r.count * rest;
    sim.fill[r.other] += r.count * t2;
    if (r.leaf >= 0) sim.fill[r.leaf] += r.count;
    sim.trees += r.count;
  }
  return sim;
}

namespace detail {

inline void require_category(const TreeType& tt, Category c, const char* what) {
  if (tt.category != c)
    throw std::invalid_argument(std::string(what) + " needs a " + to_string(c) + " type, got " +
                                to_string(tt.category));
  if (tt.t1 < 1 || tt.t2 < 1) throw std::invalid_argument("tree type needs both colour classes");
}

inline FillSchedule finish(TreeType tt, FillShape shape, std::vector<RoundPlan> rounds, long long fill) {
  FillSchedule s{tt, shape, std::move(rounds), fill, 0};
  for (const auto& r : s.rounds) s.trees_consumed += r.count;
  return s;
}

// t * |t2 - t1| + t1 when t2 >= t1, minus t1 otherwise.
inline long long m3_unit(const TreeType& tt) {
  const long long k = std::llabs(static_cast<long long>(tt.t2) - tt.t1);
  return tt.t2 >= tt.t1 ? tt.t * k + tt.t1 : tt.t * k - tt.t1;
}

inline long long m2_unit(const TreeType& tt) {
  return std::llabs(static_cast<long long>(tt.t1) - tt.t2 - 1);
}

}  // namespace detail

// One tree each way on an edge AB: t per cluster.
inline FillSchedule schedule_m1(const TreeType& tt, long long h = 1) {
  return detail::finish(tt, FillShape::m1_edge,
                        {{"AB", h, 1, 1, 0}, {"BA", h, 0, 0, 1}}, tt.t * h);
}

inline FillSchedule schedule_m2(const TreeType& tt, long long h = 1) {
  detail::require_category(tt, Category::Unbal, "schedule_m2");
  const long long t1 = tt.t1;
  const long long t2 = tt.t2;
  const long long x = t1 > t2 ? t1 - t2 - 2 : t2 - t1 + 2;
  const long long y = t1 > t2 ? t1 - t2 : t2 - t1;
  // A=0 B=1 C=2 D=3
  return detail::finish(tt, FillShape::m2_path4,
                        {{"x:AB root B", x * h, 1, 1, 0},
                         {"x:CD root C", x * h, 2, 2, 3},
                         {"y:root C rest AB", y * h, 2, 0, 1},
                         {"y:root B rest CD", y * h, 1, 3, 2}},
                        detail::m2_unit(tt) * tt.t * h);
}

inline FillSchedule schedule_m3(const TreeType& tt, long long h = 1) {
  detail::require_category(tt, Category::Unbal, "schedule_m3");
  const long long t = tt.t;
  const long long t1 = tt.t1;
  const long long t2 = tt.t2;
  long long x, y, z;
  if (t2 >= t1) {
    const long long k = t2 - t1;
    x = t * (k + 1);
    y = t * k;
    z = (t - 1) * k + t1;
  } else {
    const long long k = t1 - t2;
    x = t * (k - 1);
    y = t * k;
    z = (t - 1) * k - t1;
  }
  // A=0 B=1 C=2 D=3 E=4 F=5
  return detail::finish(tt, FillShape::m3_path6,
                        {{"x:AB root B", x * h, 1, 1, 0},
                         {"x:EF root E", x * h, 4, 4, 5},
                         {"y:root C rest AB", y * h, 2, 0, 1},
                         {"y:root D rest EF", y * h, 3, 5, 4},
                         {"z:CD root C", z * h, 2, 2, 3},
                         {"z:DC root D", z * h, 3, 3, 2}},
                        t * detail::m3_unit(tt) * h);
}

// Multipliers that make M1, M2 and M3 shapes all receive the same fill.
struct BatchPlan {
  long long h_m1 = 0;
  long long h_m2 = 0;
  long long h_m3 = 0;
  long long per_cluster_fill = 0;
};

inline BatchPlan batch_plan(const TreeType& tt) {
  detail::require_category(tt, Category::Unbal, "batch_plan");
  const long long a = detail::m2_unit(tt);
  const long long b = detail::m3_unit(tt);
  return {a * b, b, a, tt.t * a * b};
}

inline long long batch_size(const TreeType& tt, long long m1, long long m2, long long m3) {
  detail::require_category(tt, Category::Unbal, "batch_size");
  return detail::m2_unit(tt) * detail::m3_unit(tt) * (2 * m1 + 4 * m2 + 6 * m3);
}

// Near-balanced trees on in-good shapes: a leaf of the root's class is moved
// one step along the path so that every cluster receives exactly t.
inline FillSchedule schedule_nearbal(const TreeType& tt, int shape_length) {
  detail::require_category(tt, Category::NearBal, "schedule_nearbal");
  switch (shape_length) {
    case 2:
      return detail::finish(tt, FillShape::nearbal_2, {{"root A", 1, 0, 0, 1}, {"root B", 1, 1, 1, 0}}, tt.t);
    case 4:
      return detail::finish(tt, FillShape::nearbal_4,
                            {{"root A leaf C", 1, 0, 0, 1, 2},
                             {"root D leaf B", 1, 3, 3, 2, 1},
                             {"root A", 1, 0, 0, 1},
                             {"root D", 1, 3, 3, 2}},
                            tt.t);
    case 6:
      return detail::finish(tt, FillShape::nearbal_6,
                            {{"root A", 1, 0, 0, 1},
                             {"root F", 1, 5, 5, 4},
                             {"root C leaf E", 1, 2, 2, 3, 4},
                             {"root D leaf B", 1, 3, 3, 2, 1},
                             {"root C rest A", 1, 2, 0, 1},
                             {"root D rest F", 1, 3, 5, 4}},
                            tt.t);
    default: throw std::invalid_argument("near-balanced shapes have 2, 4 or 6 clusters");
  }
}

inline FillSchedule schedule_mod_out(const TreeType& tt) {
  detail::require_category(tt, Category::Unbal, "schedule_mod_out");
  const long long t = tt.t;
  const long long t1 = tt.t1;
  const long long t2 = tt.t2;
  long long x, y, z;
  if (t2 >= t1) {
    const long long k = t2 - t1;
    x = t * (k + 1);
    y = t * k;
    z = (t - 2) * k + t1;
  } else {
    const long long k = t1 - t2;
    x = t * (k - 1);
    y = t * k;
    z = (t - 2) * k - t1;
  }
  // A=0 A'=1 B=2 B'=3 C=4 D=5 E=6 E'=7 F=8 F'=9
  return detail::finish(tt, FillShape::mod_out_branch,
                        {{"x:AB root B", x, 2, 2, 0},
                         {"x:A'B' root B'", x, 3, 3, 1},
                         {"x:EF root E", x, 6, 6, 8},
                         {"x:E'F' root E'", x, 7, 7, 9},
                         {"y:root C rest AB", y, 4, 0, 2},
                         {"y:root C rest A'B'", y, 4, 1, 3},
                         {"y:root D rest EF", y, 5, 8, 6},
                         {"y:root D rest E'F'", y, 5, 9, 7},
                         {"z:CD root C", z, 4, 4, 5},
                         {"z:DC root D", z, 5, 5, 4}},
                        t * detail::m3_unit(tt));
}

inline FillSchedule schedule_mod_in_nearbal(const TreeType& tt) {
  detail::require_category(tt, Category::NearBal, "schedule_mod_in_nearbal");
  const long long t1 = tt.t1;
  if (t1 < 3) throw std::invalid_argument("branching in-shapes need a larger class of at least 3");
  const long long a = 2 * t1 - 1;
  const long long b = t1 - 3;
  return detail::finish(tt, FillShape::mod_in_branch,
                        {{"root C via B to A", a, 4, 0, 2},
                         {"root C via B' to A'", a, 4, 1, 3},
                         {"root D via E to F", a, 5, 8, 6},
                         {"root D via E' to F'", a, 5, 9, 7},
                         {"CD root C", b, 4, 4, 5},
                         {"DC root D", b, 5, 5, 4}},
                        (2 * t1 - 1) * (t1 - 1));
}

}  // namespace treembed

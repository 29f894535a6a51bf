// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "treembed/decomposition.hpp"
#include "treembed/fill.hpp"
#include "treembed/generators.hpp"
#include "treembed/matching.hpp"
#include "treembed/oracle.hpp"
#include "treembed/ordering.hpp"
#include "treembed/pipeline.hpp"
#include "treembed/structured.hpp"

using namespace treembed;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int report(int id, const std::string& name, const std::function<Outcome()>& run) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %2d %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------

Outcome containment_scan() {
  const auto exhaustive = conjecture_scan(2, 7);
  ScanOptions opt;
  opt.mode = ScanMode::random;
  opt.budget = 10000;
  opt.seed = 2024;
  const auto random = conjecture_scan(8, 14, opt);
  std::ostringstream d;
  d << "exhaustive m=2..7: " << exhaustive.pairs_tested << " pairs, " << exhaustive.failures.size()
    << " failures; random m=8..14: " << random.pairs_tested << " pairs, " << random.failures.size() << " failures";
  return {exhaustive.ok() && random.ok() && random.pairs_tested >= 10000, d.str()};
}

Outcome decomposition_suite() {
  const Ratio betas[] = {{1, 20}, {1, 10}, {1, 5}};
  Rng rng(7);
  long long runs = 0, bad = 0, absorbed_logged = 0;
  std::string first_violation;
  for (int i = 0; i < 1000; ++i) {
    const int m = std::uniform_int_distribution<int>(50, 2000)(rng);
    const auto profile = i % 3 == 0 ? TreeProfile::caterpillar : (i % 3 == 1 ? TreeProfile::broom : TreeProfile::uniform);
    const auto t = gen_tree(m, profile, rng());
    for (Ratio beta : betas) {
      const auto r = check_decomposition(t, cut_tree(t, beta));
      ++runs;
      absorbed_logged += static_cast<long long>(r.childless_absorbed.size());
      if (!r.ok()) {
        ++bad;
        if (first_violation.empty()) first_violation = r.violations.front();
      }
    }
  }
  std::ostringstream d;
  d << runs - bad << "/" << runs << " decompositions pass every structural check; " << absorbed_logged
    << " childless absorbed seeds logged";
  if (!first_violation.empty()) d << "; first violation: " << first_violation;
  return {bad == 0, d.str()};
}

Outcome high_degree_suite() {
  const Ratio psis[] = {{1, 100}, {1, 30}, {1, 10}, {1, 4}};
  Rng rng(11);
  int held = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = std::uniform_int_distribution<int>(20, 200)(rng);
    const Ratio psi = psis[i % 4];
    const int min_deg = static_cast<int>((Ratio{2, 3} - psi).ceil_times(n));
    const double prob = std::uniform_real_distribution<double>(0.4, 0.8)(rng);
    const Graph g = random_graph_with_min_degree(n, prob, min_deg, rng());
    std::vector<Vertex> s;
    const double keep = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
    for (Vertex v = 0; v < n; ++v)
      if (std::bernoulli_distribution(keep)(rng)) s.push_back(v);
    const auto a = high_degree_set(g, s, psi);
    held += meets_double_counting_bound(static_cast<long long>(a.size()), n, psi) ? 1 : 0;
  }
  return {held == 500, std::to_string(held) + "/500 instances meet |A| >= (1/3 + sqrt(psi)/10)n"};
}

Outcome matching_suite() {
  const Ratio xis[] = {{1, 100}, {3, 100}, {45, 1000}};
  Rng rng(13);
  int good = 0;
  std::string first;
  for (int i = 0; i < 200; ++i) {
    const int p = std::uniform_int_distribution<int>(30, 300)(rng);
    const Ratio xi = xis[i % 3];
    const int min_deg = static_cast<int>((Ratio{2, 3} - xi).ceil_times(p));
    const double prob = std::uniform_real_distribution<double>(0.5, 0.8)(rng);
    const Graph h = random_graph_with_min_degree(p, prob, min_deg, rng());
    std::vector<Vertex> n_set(static_cast<std::size_t>(p));
    std::iota(n_set.begin(), n_set.end(), 0);
    std::shuffle(n_set.begin(), n_set.end(), rng);
    n_set.resize(static_cast<std::size_t>(detail::required_n_size(p, xi)));
    std::sort(n_set.begin(), n_set.end());
    const auto r = good_structures(h, n_set, xi);
    bool ok = r.ok();
    if (ok) {
      const auto& gs = *r.structures;
      std::vector<Vertex> n_rest;
      for (Vertex v : n_set)
        if (!std::binary_search(gs.excluded.begin(), gs.excluded.end(), v)) n_rest.push_back(v);
      ok = static_cast<long long>(gs.y.size()) <= (xi * Ratio{3, 1}).floor_times(p) + 1 &&
           static_cast<long long>(gs.excluded.size()) <= (xi * Ratio{15, 1}).floor_times(p) + 1 &&
           validate_matching(h, gs.matching, gs.excluded, n_rest).ok && validate_partition(h, gs.in_good, n_rest).ok &&
           validate_partition(h, gs.out_good, n_rest).ok;
    }
    if (ok)
      ++good;
    else if (first.empty())
      first = "p=" + std::to_string(p) + " xi=" + xi.str() + " " + r.failure;
  }
  return {good == 200, std::to_string(good) + "/200 graphs give valid structures within the size bounds" +
                           (first.empty() ? "" : "; first failure: " + first)};
}

Outcome fill_suite() {
  long long schedules = 0, mismatches = 0;
  std::string first;
  auto check = [&](const FillSchedule& s, long long closed_form, const char* what) {
    ++schedules;
    const Simulation sim = simulate(s);
    const bool ok = sim.error.empty() && sim.balanced() && sim.fill.front() == closed_form &&
                    s.per_cluster_fill == closed_form && sim.trees == s.trees_consumed;
    if (!ok) {
      ++mismatches;
      if (first.empty())
        first = std::string(what) + " t1=" + std::to_string(s.type.t1) + " t2=" + std::to_string(s.type.t2);
    }
  };
  for (int t1 = 1; t1 <= 9; ++t1)
    for (int t2 = 1; t1 + t2 <= 10; ++t2) {
      const TreeType tt = make_type(t1, t2);
      const long long t = t1 + t2;
      check(schedule_m1(tt), t, "M1");
      if (tt.category == Category::Unbal) {
        const long long k = std::llabs(static_cast<long long>(t2) - t1);
        const long long m2 = t * std::llabs(static_cast<long long>(t1) - t2 - 1);
        const long long m3 = t * (t2 >= t1 ? t * k + t1 : t * k - t1);
        check(schedule_m2(tt), m2, "M2");
        check(schedule_m3(tt), m3, "M3");
        check(schedule_mod_out(tt), m3, "mod-out");
        // One batch fills the three shapes equally and uses batch_size trees.
        const auto plan = batch_plan(tt);
        const long long batch_fill = m2 * m3 / t;
        check(schedule_m1(tt, plan.h_m1), batch_fill, "batch M1");
        check(schedule_m2(tt, plan.h_m2), batch_fill, "batch M2");
        check(schedule_m3(tt, plan.h_m3), batch_fill, "batch M3");
        const long long simulated = simulate(schedule_m1(tt, plan.h_m1)).trees +
                                    simulate(schedule_m2(tt, plan.h_m2)).trees +
                                    simulate(schedule_m3(tt, plan.h_m3)).trees;
        ++schedules;
        if (simulated != batch_size(tt, 1, 1, 1)) {
          ++mismatches;
          if (first.empty()) first = "batch size t1=" + std::to_string(t1) + " t2=" + std::to_string(t2);
        }
      } else if (tt.category == Category::NearBal) {
        for (int len : {2, 4, 6}) check(schedule_nearbal(tt, len), t, "NearBal");
        if (t1 >= 3) check(schedule_mod_in_nearbal(tt), (2LL * t1 - 1) * (t1 - 1), "mod-in");
      }
    }
  return {mismatches == 0, std::to_string(schedules - mismatches) + "/" + std::to_string(schedules) +
                               " schedules fill evenly and match their closed forms" +
                               (first.empty() ? "" : "; first mismatch: " + first)};
}

struct PipelineStats {
  int runs = 0, verified = 0, certified_failures = 0, uncertified_failures = 0, verify_rejects = 0;
  long long snapshots = 0, conservation_breaks = 0, balance_breaks = 0, seeds = 0, pseudo_breaks = 0;
  long long pseudo_max = 0, pseudo_bound = 0;
};

const PipelineStats& pipeline_runs() {
  static const PipelineStats stats = [] {
    PipelineStats s;
    for (int r = 0; r < 50; ++r) {
      DensityProfile pr;
      pr.low = 0.5;
      pr.min_weighted_degree = 2.0 / 3;
      const ClusterHost host = gen_cluster_host(30, 200, pr, 1000 + static_cast<std::uint64_t>(r));
      const long long m = host.vertex_count() - 1;
      PipelineParams params;
      const int edges = static_cast<int>((Ratio{1, 1} - params.alpha).floor_times(m));
      const RootedTree t = gen_tree(edges, TreeProfile::uniform, 5000 + static_cast<std::uint64_t>(r));
      const auto res = run_pipeline(host, t, params);
      ++s.runs;
      if (res.ok()) {
        if (verify_embedding(host.underlying, t, res.phi, true))
          ++s.verified;
        else
          ++s.verify_rejects;
      } else if (res.failure && res.failure->certified(host.underlying, res.z)) {
        ++s.certified_failures;
      } else {
        ++s.uncertified_failures;
      }
      for (const auto& snap : res.log.snapshots) {
        ++s.snapshots;
        s.conservation_breaks += snap.conserved ? 0 : 1;
        s.balance_breaks += snap.balanced ? 0 : 1;
      }
      s.pseudo_bound = (params.eps * Ratio{600, 1}).floor_times(m);
      for (const auto& rec : res.log.seed_records) {
        ++s.seeds;
        s.pseudo_breaks += rec.pseudo_ok ? 0 : 1;
        s.pseudo_max = std::max(s.pseudo_max, rec.pseudo_used);
      }
    }
    return s;
  }();
  return stats;
}

Outcome pipeline_suite() {
  const auto& s = pipeline_runs();
  std::ostringstream d;
  d << s.verified << "/" << s.runs << " verified total embeddings; " << s.certified_failures
    << " certified failures, " << s.uncertified_failures << " uncertified, " << s.verify_rejects
    << " successes rejected by the verifier";
  return {20 * s.verified >= 19 * s.runs && s.uncertified_failures == 0 && s.verify_rejects == 0, d.str()};
}

Outcome ledger_suite() {
  const auto& s = pipeline_runs();
  std::ostringstream d;
  d << s.snapshots << " snapshots: " << s.conservation_breaks << " conservation and " << s.balance_breaks
    << " balance breaks; " << s.seeds << " seeds logged, max discarded " << s.pseudo_max << " vs bound "
    << s.pseudo_bound;
  return {s.snapshots > 0 && s.conservation_breaks == 0 && s.balance_breaks == 0 && s.pseudo_breaks == 0, d.str()};
}

// Recounts the first-stage conclusions from the raw embedding and host parts.
bool first_stage_recount(const StructuredHost& h, const RootedTree& t, const FirstStageResult& r) {
  const long long m = t.edge_count();
  const auto part = h.part_of();
  const auto d = cut_tree(t, kBadHeavyBeta, true);
  std::array<long long, 3> counts{};
  for (Vertex v = 0; v < t.size(); ++v)
    if (r.in_tprime[v] && part[r.phi[v]] < 3) ++counts[part[r.phi[v]]];
  std::vector<char> covered(static_cast<std::size_t>(t.size()), 0);
  long long at_h2 = 0;
  for (const auto& mt : d.F1) {
    if (r.in_tprime[mt.root] || !classify(t, mt.vertices, mt.root).is_bad) continue;
    for (Vertex v : mt.vertices) covered[v] = 1;
    const int p = part[r.phi[mt.parent_seed]];
    at_h2 += p == 1 || p == 5 ? 1 : 0;
  }
  for (Vertex v = 0; v < t.size(); ++v)
    if (!r.in_tprime[v] && !covered[v]) return false;
  return 400 * at_h2 >= 33 * m && counts[1] >= counts[0] && counts[1] >= counts[2];
}

Outcome structured_suite() {
  Rng rng(17);
  int verified = 0, recounted = 0;
  std::string first;
  for (int i = 0; i < 100; ++i) {
    const int m = std::uniform_int_distribution<int>(400, 2000)(rng);
    HostProfile hp;
    hp.kind = HostKind::tripartite_structured;
    const auto host = StructuredHost::from_generated(gen_host(m, hp, rng()));
    const auto t = gen_tree(m, TreeProfile::bad_heavy, rng());
    if (100 * count_bad_trees(t, cut_tree(t, kBadHeavyBeta, true)) < 33LL * m) {
      if (first.empty()) first = "generated tree below the bad-tree count at m=" + std::to_string(m);
      continue;
    }
    const auto res = embed_bad_heavy(host, t, kBadHeavyBeta);
    if (res.ok() && verify_embedding(host.graph, t, res.phi, true))
      ++verified;
    else if (first.empty())
      first = "m=" + std::to_string(m) + ": " + res.error;
    if (res.first.ok() && first_stage_recount(host, t, res.first)) ++recounted;
  }
  return {verified == 100 && recounted == 100,
          std::to_string(verified) + "/100 verified total embeddings; first-stage conclusions recounted in " +
              std::to_string(recounted) + "/100" + (first.empty() ? "" : "; first problem: " + first)};
}

Outcome ordering_suite() {
  Rng rng(19);
  const Ratio betas[] = {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 6}};
  int clean = 0;
  std::string first;
  for (int i = 0; i < 500; ++i) {
    const int m = std::uniform_int_distribution<int>(20, 1500)(rng);
    const auto profile = i % 3 == 0 ? TreeProfile::caterpillar : (i % 3 == 1 ? TreeProfile::broom : TreeProfile::uniform);
    const auto t = gen_tree(m, profile, rng());
    const auto padded = pad_seeds(t, cut_tree(t, betas[i % 5]));
    const auto o = build_orders(padded.tree, padded.decomposition.seeds);
    const auto gt = build_group_tree(o);
    const auto seqs = build_sequences(gt);
    const auto issues = check_ordering(o, gt, seqs);
    if (issues.empty())
      ++clean;
    else if (first.empty())
      first = issues.front();
  }
  return {clean == 500, std::to_string(clean) + "/500 padded seed sets pass group, type, sequence and order checks" +
                            (first.empty() ? "" : "; first issue: " + first)};
}

Outcome oracle_suite() {
  long long pairs = 0, disagreements = 0;
  std::vector<RootedTree> trees;
  for (int m = 0; m <= 6; ++m)
    for (auto& t : enumerate_trees(m)) trees.push_back(std::move(t));
  for (int n = 1; n <= 7; ++n)
    for (const auto& rows : detail::graph_classes(n)) {
      Graph g(n);
      for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v)
          if (rows[u] >> v & 1u) g.add_edge(u, v);
      for (const auto& t : trees) {
        if (t.size() > n) continue;
        ++pairs;
        const auto phi = tree_contains(g, t);
        const bool found = phi && verify_embedding(g, t, *phi, true);
        disagreements += found != naive_contains(g, t) ? 1 : 0;
      }
    }
  // Tree counts against parent sequences deduplicated by a code minimised over all roots.
  int count_mismatch = 0;
  for (int m = 1; m <= 8; ++m) {
    std::set<std::string> codes;
    std::vector<Vertex> parent(static_cast<std::size_t>(m + 1), kNoVertex);
    std::function<void(int)> fill = [&](int v) {
      if (v > m) {
        const RootedTree t(parent);
        std::string best;
        std::vector<std::vector<Vertex>> adj(static_cast<std::size_t>(t.size()));
        for (Vertex x = 0; x < t.size(); ++x)
          if (t.parent(x) != kNoVertex) {
            adj[x].push_back(t.parent(x));
            adj[t.parent(x)].push_back(x);
          }
        std::function<std::string(Vertex, Vertex)> code = [&](Vertex x, Vertex from) {
          std::vector<std::string> kids;
          for (Vertex y : adj[x])
            if (y != from) kids.push_back(code(y, x));
          std::sort(kids.begin(), kids.end());
          std::string out = "<";
          for (const auto& k : kids) out += k;
          return out + ">";
        };
        for (Vertex r = 0; r < t.size(); ++r) {
          auto c = code(r, kNoVertex);
          if (best.empty() || c < best) best = c;
        }
        codes.insert(best);
        return;
      }
      for (Vertex p = 0; p < v; ++p) {
        parent[v] = p;
        fill(v + 1);
      }
    };
    fill(1);
    count_mismatch += codes.size() != enumerate_trees(m).size() ? 1 : 0;
  }
  return {disagreements == 0 && count_mismatch == 0,
          std::to_string(pairs - disagreements) + "/" + std::to_string(pairs) +
              " containment answers agree with permutation search; tree counts differ for " +
              std::to_string(count_mismatch) + " of m=1..8"};
}

}  // namespace

int main() {
  int failed = 0;
  failed += report(1, "containment scan", containment_scan);
  failed += report(2, "tree decomposition", decomposition_suite);
  failed += report(3, "high-degree set bound", high_degree_suite);
  failed += report(4, "matchings and path covers", matching_suite);
  failed += report(5, "fill schedules", fill_suite);
  failed += report(6, "pipeline runs", pipeline_suite);
  failed += report(7, "ledger invariants", ledger_suite);
  failed += report(8, "structured embedder", structured_suite);
  failed += report(9, "seed orderings", ordering_suite);
  failed += report(10, "oracle cross-validation", oracle_suite);
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}

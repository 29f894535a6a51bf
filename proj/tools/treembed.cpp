// Command-line front end: generators, decomposition, ordering, embedders,
// verification and scans. Exit codes: 0 success, 1 usage error, 2 violation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include "treembed/decomposition.hpp"
#include "treembed/generators.hpp"
#include "treembed/io.hpp"
#include "treembed/oracle.hpp"
#include "treembed/ordering.hpp"
#include "treembed/pipeline.hpp"
#include "treembed/structured.hpp"

using namespace treembed;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kViolation = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  bool json_lines = false;
  int threads = 1;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return json::parse(in);
}

json read_host_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return read_host_json(in);
}

void emit(const json& j, const std::string& path = "") {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << j.dump(2) << '\n';
}

Ratio parse_ratio(const std::string& text) {
  try {
    return Ratio::parse(text);
  } catch (const std::exception& e) {
    throw UsageError("bad ratio '" + text + "': " + e.what());
  }
}

TreeProfile parse_tree_profile(const std::string& name) {
  if (name == "uniform") return TreeProfile::uniform;
  if (name == "caterpillar") return TreeProfile::caterpillar;
  if (name == "broom") return TreeProfile::broom;
  if (name == "bad-heavy") return TreeProfile::bad_heavy;
  throw UsageError("unknown tree profile " + name);
}

HostKind parse_host_kind(const std::string& name) {
  if (name == "random") return HostKind::random_min_degree_universal;
  if (name == "gamma-special") return HostKind::gamma_special;
  if (name == "tripartite") return HostKind::tripartite_structured;
  if (name == "cliques") return HostKind::disjoint_cliques;
  if (name == "regular") return HostKind::regular;
  throw UsageError("unknown host kind " + name);
}

// "p,size,profile" with profile desk, complete or low=<density>.
ClusterHost synthetic_cluster_host(const std::string& spec, std::uint64_t seed) {
  std::stringstream in(spec);
  std::string p_text, size_text, profile = "desk";
  if (!std::getline(in, p_text, ',') || !std::getline(in, size_text, ','))
    throw UsageError("--synthetic expects p,size[,profile]");
  std::getline(in, profile);
  DensityProfile pr;
  if (profile == "desk" || profile.empty()) {
    pr.low = 0.5;
    pr.min_weighted_degree = 2.0 / 3;
  } else if (profile == "complete") {
    pr.low = 1.0;
    pr.retain = 1.0;
  } else if (profile.rfind("low=", 0) == 0) {
    pr.low = std::stod(profile.substr(4));
    pr.min_weighted_degree = 2.0 / 3;
  } else {
    throw UsageError("unknown synthetic profile " + profile);
  }
  return gen_cluster_host(std::stoi(p_text), std::stoi(size_text), pr, seed);
}

json certificate_json(const PipelineFailure& f, const ClusterHost& host, const std::vector<Vertex>& z) {
  json j{{"kind", to_string(f.kind)}, {"message", f.message}, {"certified", f.certified(host.underlying, z)}};
  if (f.capacity) {
    json entries = json::array();
    for (const auto& e : f.capacity->entries)
      entries.push_back({{"cluster", e.cluster},
                         {"family", to_string(e.family)},
                         {"parent_image", e.parent_image},
                         {"free_vertices", e.free_vertices},
                         {"demand", e.demand}});
    j["capacity"] = {{"phase", f.capacity->phase}, {"entries", entries}};
  }
  if (f.obstruction)
    j["hall"] = {{"seed_set", f.obstruction->seed_set},
                 {"seed_images", f.obstruction->seed_images},
                 {"leaf_demand", f.obstruction->leaf_demand},
                 {"neighborhood_size", f.obstruction->neighborhood_size}};
  if (f.witness)
    j["cluster_witness"] = {{"deficient", f.witness->deficient},
                            {"neighbourhood", f.witness->neighbourhood},
                            {"slack", f.witness->slack}};
  return j;
}

json pipeline_report(const PipelineResult& r, const ClusterHost& host) {
  const auto& log = r.log;
  json phases = json::object();
  for (const auto& [name, secs] : log.phase_seconds) phases[name] = secs;
  json snapshots = json::array();
  for (const auto& s : log.snapshots)
    snapshots.push_back({{"op", s.op},
                         {"seed", s.seed},
                         {"conserved", s.conserved},
                         {"balanced", s.balanced},
                         {"max_f2_gap", s.max_f2_gap},
                         {"f1_gap", s.f1_gap}});
  json seeds = json::array();
  for (const auto& s : log.seed_records)
    seeds.push_back({{"seed", s.seed},
                     {"cluster", s.cluster},
                     {"image", s.image},
                     {"typicality_relaxed", s.typicality_relaxed},
                     {"z_degree", s.z_degree},
                     {"z_degree_ok", s.z_degree_ok},
                     {"pseudo_used", s.pseudo_used},
                     {"pseudo_ok", s.pseudo_ok},
                     {"f1_trees", s.f1_trees},
                     {"f2_trees", s.f2_trees}});
  std::vector<int> slices(log.slice_sizes.begin(), log.slice_sizes.end());
  json j{{"success", r.ok()},
         {"verdict", r.verdict.ok ? "ok" : r.verdict.reason},
         {"phase_seconds", phases},
         {"slice_sizes", slices},
         {"seeds", log.seeds},
         {"padded_seeds", log.padded_seeds},
         {"balanced_bound", log.balanced_bound},
         {"relaxed_placements", log.relaxed_placements},
         {"typical_parent_checks", log.typical_parent_checks},
         {"typical_parent_binding", log.typical_parent_binding},
         {"discarded_total", log.discarded_total},
         {"audit_failures", log.audit.failures()},
         {"seed_records", seeds},
         {"snapshots", snapshots}};
  if (r.failure) j["certificate"] = certificate_json(*r.failure, host, r.z);
  if (r.ok()) j["embedding"] = embedding_to_json(r.phi);
  return j;
}

json scan_json(const ScanReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures)
    failures.push_back({{"m", f.m}, {"tree", f.tree}, {"host_edges", f.host_edges}, {"reason", f.reason}});
  return {{"m_range", {r.m_lo, r.m_hi}},
          {"mode", to_string(r.mode)},
          {"trees_tested", r.trees_tested},
          {"hosts_tested", r.hosts_tested},
          {"pairs_tested", r.pairs_tested},
          {"failures", failures},
          {"elapsed_seconds", r.elapsed_seconds}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree embedding toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("--json", g.json_lines, "Stream one JSON object per item where supported");
  app.add_option("--threads", g.threads, "Worker threads for scans")->check(CLI::PositiveNumber);

  std::function<int()> action;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a tree, host or cluster host");
  std::string gen_what = "tree", gen_profile = "uniform", gen_kind = "random", gen_out, gen_gamma = "1/10";
  int gen_m = 20, gen_p = 6, gen_size = 20, gen_degree = 0;
  double gen_prob = 2.0 / 3;
  gen->add_option("what", gen_what, "tree, host or cluster")->check(CLI::IsMember({"tree", "host", "cluster"}));
  gen->add_option("--m", gen_m, "Edges of the tree / host vertices minus one")->check(CLI::PositiveNumber);
  gen->add_option("--profile", gen_profile, "Tree profile: uniform, caterpillar, broom, bad-heavy");
  gen->add_option("--kind", gen_kind, "Host kind: random, gamma-special, tripartite, cliques, regular");
  gen->add_option("--edge-prob", gen_prob, "Edge probability or inside-part density");
  gen->add_option("--gamma", gen_gamma, "Gamma for special hosts");
  gen->add_option("--degree", gen_degree, "Degree for regular hosts");
  gen->add_option("--p", gen_p, "Clusters")->check(CLI::PositiveNumber);
  gen->add_option("--size", gen_size, "Cluster size")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output file (default stdout)");
  gen->callback([&] {
    action = [&] {
      if (gen_what == "tree") {
        emit(tree_to_json(gen_tree(gen_m, parse_tree_profile(gen_profile), g.seed)), gen_out);
      } else if (gen_what == "host") {
        HostProfile hp;
        hp.kind = parse_host_kind(gen_kind);
        hp.edge_prob = gen_prob;
        hp.gamma = parse_ratio(gen_gamma);
        hp.degree = gen_degree;
        const auto gh = gen_host(gen_m, hp, g.seed);
        emit(graph_to_json(gh.graph, gh.parts), gen_out);
      } else {
        emit(cluster_host_to_json(synthetic_cluster_host(std::to_string(gen_p) + "," + std::to_string(gen_size) +
                                                             "," + gen_profile,
                                                         g.seed)),
             gen_out);
      }
      return kOk;
    };
  });

  // cut
  auto* cut = app.add_subcommand("cut", "Decompose a tree into seeds and micro-trees");
  std::string cut_tree_path, cut_beta = "1/10";
  bool cut_relaxed = false;
  cut->add_option("--tree", cut_tree_path, "Tree JSON")->required();
  cut->add_option("--beta", cut_beta, "Size parameter");
  cut->add_flag("--relax-f2", cut_relaxed, "Allow two-seeded trees above the usual size");
  cut->callback([&] {
    action = [&] {
      const RootedTree t = tree_from_json(read_json_file(cut_tree_path));
      const auto d = cut_tree(t, parse_ratio(cut_beta), cut_relaxed);
      const auto rep = check_decomposition(t, d);
      json j = decomposition_to_json(d);
      j["invariants_ok"] = rep.ok();
      j["violations"] = rep.violations;
      j["childless_absorbed"] = rep.childless_absorbed;
      j["bad_trees"] = count_bad_trees(t, d);
      emit(j);
      return rep.ok() ? kOk : kViolation;
    };
  });

  // order
  auto* order = app.add_subcommand("order", "Seed orderings, group tree and sequences");
  std::string order_tree_path, order_beta = "1/10";
  order->add_option("--tree", order_tree_path, "Tree JSON")->required();
  order->add_option("--beta", order_beta, "Size parameter");
  order->callback([&] {
    action = [&] {
      const RootedTree t = tree_from_json(read_json_file(order_tree_path));
      const auto padded = pad_seeds(t, cut_tree(t, parse_ratio(order_beta)));
      const auto o = build_orders(padded.tree, padded.decomposition.seeds);
      const auto gt = build_group_tree(o);
      const auto seqs = build_sequences(gt);
      const auto issues = check_ordering(o, gt, seqs);
      json groups = json::array();
      for (const auto& block : gt.blocks)
        for (const auto& grp : block)
          groups.push_back({{"seeds", grp.seeds},
                            {"slot", grp.slot},
                            {"type", grp.type == GroupType::type1   ? "type1"
                                     : grp.type == GroupType::type2 ? "type2"
                                                                    : "untyped"}});
      emit({{"original_size", padded.original_size},
            {"sigma", o.sigma},
            {"tau", o.tau},
            {"rho", o.rho},
            {"j_star", o.j_star},
            {"groups", groups},
            {"issues", issues}});
      return issues.empty() ? kOk : kViolation;
    };
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Run the cluster-host embedding pipeline");
  std::string embed_tree, embed_host, embed_synth, embed_report;
  std::string embed_alpha = "3/10", embed_beta = "1/30", embed_eps = "1/5";
  embed->add_option("--tree", embed_tree, "Tree JSON (default: random tree with (1-alpha)m edges)");
  auto* host_opt = embed->add_option("--host", embed_host, "Cluster host JSON");
  embed->add_option("--synthetic", embed_synth, "p,size[,profile] with profile desk, complete or low=<d>")
      ->excludes(host_opt);
  embed->add_option("--alpha", embed_alpha, "Leaf and edge slack");
  embed->add_option("--beta", embed_beta, "Micro-tree size parameter");
  embed->add_option("--eps", embed_eps, "Typicality tolerance");
  embed->add_option("--report", embed_report, "Report file (default stdout)");
  embed->callback([&] {
    action = [&] {
      if (embed_host.empty() == embed_synth.empty()) throw UsageError("give exactly one of --host or --synthetic");
      const ClusterHost host = embed_host.empty() ? synthetic_cluster_host(embed_synth, g.seed)
                                                  : cluster_host_from_json(read_json_file(embed_host));
      PipelineParams params;
      params.alpha = parse_ratio(embed_alpha);
      params.beta = parse_ratio(embed_beta);
      params.eps = parse_ratio(embed_eps);
      const long long m = host.vertex_count() - 1;
      const RootedTree t =
          embed_tree.empty()
              ? [&] {
                  Rng rng(g.seed + 1);
                  return random_labelled_tree(
                      static_cast<int>((Ratio{1, 1} - params.alpha).floor_times(m)) + 1, rng);
                }()
              : tree_from_json(read_json_file(embed_tree));
      const auto res = run_pipeline(host, t, params);
      emit(pipeline_report(res, host), embed_report);
      return res.ok() ? kOk : kViolation;
    };
  });

  // verify
  auto* verify = app.add_subcommand("verify", "Check an embedding against raw adjacency");
  std::string verify_tree, verify_host, verify_phi;
  bool verify_partial = false;
  verify->add_option("--tree", verify_tree, "Tree JSON")->required();
  verify->add_option("--host", verify_host, "Host JSON or edge list")->required();
  verify->add_option("--embedding", verify_phi, "Embedding JSON (array, or object with an \"embedding\" field)")
      ->required();
  verify->add_flag("--partial", verify_partial, "Allow unmapped tree vertices");
  verify->callback([&] {
    action = [&] {
      const RootedTree t = tree_from_json(read_json_file(verify_tree));
      const Graph host = graph_from_json(read_host_file(verify_host));
      json pj = read_json_file(verify_phi);
      if (pj.is_object()) pj = pj.at("embedding");
      const auto verdict = verify_embedding(host, t, embedding_from_json(pj), !verify_partial);
      emit({{"ok", verdict.ok}, {"reason", verdict.reason}, {"first", verdict.first}, {"second", verdict.second}});
      return verdict.ok ? kOk : kViolation;
    };
  });

  // special-scan
  auto* special = app.add_subcommand("special-scan", "Search a host for a special tripartition and holes");
  std::string special_host, special_gamma = "1/10", special_eps = "1/1000";
  int special_budget = 64;
  special->add_option("--host", special_host, "Host JSON or edge list")->required();
  special->add_option("--gamma", special_gamma, "Gamma");
  special->add_option("--eps", special_eps, "Hole sparsity");
  special->add_option("--budget", special_budget, "Start vertices tried by the heuristics");
  special->callback([&] {
    action = [&] {
      const Graph host = graph_from_json(read_host_file(special_host));
      const Ratio gamma = parse_ratio(special_gamma);
      const Ratio eps = parse_ratio(special_eps);
      json j{{"n", host.vertex_count()}};
      if (auto sp = find_gamma_special(host, gamma, special_budget))
        j["special_partition"] = {sp->parts[0], sp->parts[1], sp->parts[2]};
      else
        j["special_partition"] = nullptr;
      const auto holes = find_holes(host, gamma, eps, special_budget);
      json hj = json::array();
      for (const auto& h : holes.holes)
        hj.push_back({{"vertices", h.vertices},
                      {"internal_edges", h.internal_edges},
                      {"max_internal_degree", h.max_internal_degree}});
      j["holes"] = hj;
      j["v_bad"] = holes.v_bad;
      emit(j);
      return kOk;
    };
  });

  // maya-embed
  auto* structured_cmd = app.add_subcommand("maya-embed", "Embed a bad-heavy tree into a five-part structured host");
  std::string structured_host, structured_tree, structured_out;
  int structured_m = 600;
  bool structured_strict = false;
  structured_cmd->add_option("--host", structured_host, "Host JSON with parts H1..H5 and {w}");
  structured_cmd->add_option("--m", structured_m, "Size of the planted host and tree when no files are given")
      ->check(CLI::PositiveNumber);
  structured_cmd->add_option("--tree", structured_tree, "Tree JSON (default: generated bad-heavy tree)");
  structured_cmd->add_option("--out", structured_out, "Report file (default stdout)");
  structured_cmd->add_flag("--strict", structured_strict, "Enforce the asymptotic beta^2 m bounds");
  structured_cmd->callback([&] {
    action = [&] {
      GeneratedHost gh;
      if (structured_host.empty()) {
        HostProfile hp;
        hp.kind = HostKind::tripartite_structured;
        gh = gen_host(structured_m, hp, g.seed);
      } else {
        const json hj = read_host_file(structured_host);
        gh.graph = graph_from_json(hj);
        if (!hj.contains("parts")) throw UsageError("structured host needs \"parts\"");
        gh.parts = hj.at("parts").get<std::vector<std::vector<Vertex>>>();
      }
      const auto host = StructuredHost::from_generated(std::move(gh));
      const RootedTree t = structured_tree.empty()
                               ? gen_tree(static_cast<int>(host.m()), TreeProfile::bad_heavy, g.seed + 1)
                               : tree_from_json(read_json_file(structured_tree));
      StructuredOptions opt;
      opt.strict_constants = structured_strict;
      const auto res = embed_bad_heavy(host, t, kBadHeavyBeta, opt);
      json first{{"w0", res.first.w0},
                 {"w1", res.first.w1},
                 {"w2", res.first.w2},
                 {"w3", res.first.w3},
                 {"s_star", res.first.s_star},
                 {"tprime_size", res.first.tprime_size},
                 {"part_counts", res.first.part_counts},
                 {"bad_left_at_h2", res.first.bad_left_at_h2},
                 {"conclusion_i", res.first.conclusion_i},
                 {"conclusion_ii", res.first.conclusion_ii},
                 {"routing_cases", res.first.cases}};
      json j{{"success", res.ok()},
             {"error", res.error},
             {"first_stage", first},
             {"filled_small_parts", res.filled_small_parts},
             {"balancing_trees", res.balancing_trees},
             {"even_trees", res.even_trees},
             {"triples", res.triples},
             {"notes", res.notes}};
      if (res.obstruction)
        j["obstruction"] = {{"part", res.obstruction->part},
                            {"second_images", res.obstruction->second_images},
                            {"free_part", res.obstruction->free_part},
                            {"neighbourhood", res.obstruction->neighbourhood},
                            {"verified", res.obstruction->verify(host.graph)}};
      if (res.ok()) j["embedding"] = embedding_to_json(res.phi);
      emit(j, structured_out);
      return res.ok() ? kOk : kViolation;
    };
  });

  // conjecture-scan
  auto* scan = app.add_subcommand("conjecture-scan", "Check that every tree embeds in every constrained host");
  int scan_from = 2, scan_to = 7;
  std::string scan_mode = "exhaustive";
  long long scan_budget = 10000;
  scan->add_option("--from", scan_from, "Smallest m");
  scan->add_option("--to", scan_to, "Largest m");
  scan->add_option("--mode", scan_mode, "exhaustive or random")->check(CLI::IsMember({"exhaustive", "random"}));
  scan->add_option("--budget", scan_budget, "Pairs in random mode");
  scan->callback([&] {
    action = [&] {
      ScanOptions opt;
      opt.mode = scan_mode == "exhaustive" ? ScanMode::exhaustive : ScanMode::random;
      opt.budget = scan_budget;
      opt.seed = g.seed;
      opt.threads = g.threads;
      if (opt.mode == ScanMode::exhaustive && scan_to > 7) throw UsageError("exhaustive scans stop at m = 7");
      std::mutex out_lock;
      if (g.json_lines)
        opt.on_pair = [&](int m, const RootedTree& t, const Graph& host, bool contained) {
          const json line{{"m", m}, {"tree", canonical_tree_code(t)}, {"host_edges", host.edge_count()},
                          {"contained", contained}};
          std::lock_guard guard(out_lock);
          std::cout << line.dump() << '\n';
        };
      const auto report = conjecture_scan(scan_from, scan_to, opt);
      if (g.json_lines)
        std::cout << scan_json(report).dump() << '\n';
      else
        emit(scan_json(report));
      return report.ok() ? kOk : kViolation;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return action ? action() : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

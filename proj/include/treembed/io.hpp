#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "treembed/cluster_host.hpp"
#include "treembed/decomposition.hpp"
#include "treembed/graph.hpp"

namespace treembed {

using json = nlohmann::json;

// Edge-list format: "n m_edges" followed by one "u v" line per edge.
inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.vertex_count() << ' ' << g.edge_count() << '\n';
  for (auto [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
}

inline Graph read_edge_list(std::istream& in) {
  long long n = 0;
  long long m = 0;
  if (!(in >> n >> m) || n < 0 || m < 0) throw std::runtime_error("bad edge-list header");
  Graph g(static_cast<int>(n));
  for (long long i = 0; i < m; ++i) {
    int u = 0;
    int v = 0;
    if (!(in >> u >> v)) throw std::runtime_error("edge list ends after " + std::to_string(i) + " edges");
    if (!g.add_edge(u, v)) throw std::runtime_error("duplicate edge " + std::to_string(u) + " " + std::to_string(v));
  }
  return g;
}

inline json tree_to_json(const RootedTree& t) {
  return json{{"root", t.root()}, {"parent", t.parents()}};
}

inline RootedTree tree_from_json(const json& j) {
  auto parent = j.at("parent").get<std::vector<Vertex>>();
  RootedTree t(std::move(parent));
  if (j.contains("root") && j.at("root").get<Vertex>() != t.root())
    throw std::runtime_error("tree root does not match the parent array");
  return t;
}

inline json embedding_to_json(const Embedding& phi) { return json(phi.images()); }

inline Embedding embedding_from_json(const json& j) {
  const auto images = j.get<std::vector<Vertex>>();
  Embedding phi(static_cast<int>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i] != kNoVertex) phi.assign(static_cast<Vertex>(i), images[i]);
  return phi;
}

inline json decomposition_to_json(const TreeDecomposition& d) {
  auto family = [](const std::vector<MicroTree>& trees) {
    json out = json::array();
    for (const auto& mt : trees) out.push_back(mt.vertices);
    return out;
  };
  json f2p = json::array();
  for (const MicroTree* mt : d.f2_prime()) f2p.push_back(mt->vertices);
  return json{{"W", d.seeds},       {"L", family(d.L)},         {"F1", family(d.F1)},
              {"F2", family(d.F2)}, {"F2p", f2p},               {"Vtilde", d.connectors},
              {"beta", d.beta.value()}};
}

// Host JSON: {"n": count, "edges": [[u, v], ...]} with optional "parts".
inline json graph_to_json(const Graph& g, const std::vector<std::vector<Vertex>>& parts = {}) {
  json j{{"n", g.vertex_count()}, {"edges", g.edge_list()}};
  if (!parts.empty()) j["parts"] = parts;
  return j;
}

inline Graph graph_from_json(const json& j) {
  Graph g(j.at("n").get<int>());
  for (const auto& e : j.at("edges")) {
    const auto [u, v] = e.get<std::pair<Vertex, Vertex>>();
    if (!g.add_edge(u, v)) throw std::runtime_error("duplicate or invalid edge " + std::to_string(u) + " " + std::to_string(v));
  }
  return g;
}

inline json cluster_host_to_json(const ClusterHost& h) {
  json j = graph_to_json(h.underlying);
  j["p"] = h.p;
  j["cluster_size"] = h.cluster_size;
  j["density"] = h.density;
  return j;
}

inline ClusterHost cluster_host_from_json(const json& j) {
  ClusterHost h;
  h.p = j.at("p").get<int>();
  h.cluster_size = j.at("cluster_size").get<int>();
  h.density = j.at("density").get<std::vector<double>>();
  h.underlying = graph_from_json(j);
  if (h.underlying.vertex_count() != h.p * h.cluster_size ||
      h.density.size() != static_cast<std::size_t>(h.p) * static_cast<std::size_t>(h.p))
    throw std::runtime_error("cluster host sizes are inconsistent");
  return h;
}

// Reads JSON when the text starts with '{', the edge-list format otherwise.
inline json read_host_json(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return json::parse(text);
  std::istringstream edges(text);
  return graph_to_json(read_edge_list(edges));
}

}  // namespace treembed

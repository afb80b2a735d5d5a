#pragma once
/**
 * @file serialize.hpp
 * @brief JSON and CSV output for trees and networks, and rebuilding them
 * from their JSON form.
 *
 * A tree file embeds the model and the build parameters; loading rebuilds
 * the tree from those (construction is deterministic) and checks that the
 * stored vertex count matches.
 */

#include <charconv>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>

#include "augtree/augmented_tree.hpp"
#include "augtree/index_tree.hpp"
#include "augtree/model.hpp"
#include "augtree/network.hpp"

namespace augtree {

/// Shortest decimal that round-trips to the same double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct TreeParams {
  int levels = 8;
  double gamma = 0.25;
  int sample_depth = 3;  ///< IFS only
  double r0 = 0.0;       ///< point clouds only
  double b = 0.0;        ///< point clouds only
};

inline std::shared_ptr<const AugmentedTree> build_from_params(const ModelSpec& model, const TreeParams& p) {
  auto tree = model.kind == ModelKind::ifs ? build_ifs_tree(model, p.levels, p.sample_depth)
                                           : build_net_tree(model, p.r0, p.b, p.levels);
  return std::make_shared<const AugmentedTree>(build_augmented_tree(std::make_shared<const IndexTree>(std::move(tree)), p.gamma));
}

inline Json params_to_json(const TreeParams& p, ModelKind kind) {
  Json j{{"levels", p.levels}, {"gamma", p.gamma}};
  if (kind == ModelKind::ifs) {
    j["sample_depth"] = p.sample_depth;
  } else {
    j["r0"] = p.r0;
    j["b"] = p.b;
  }
  return j;
}

inline TreeParams params_from_json(const Json& j) {
  TreeParams p;
  try {
    p.levels = j.at("levels").get<int>();
    p.gamma = j.at("gamma").get<double>();
    p.sample_depth = j.value("sample_depth", 3);
    p.r0 = j.value("r0", 0.0);
    p.b = j.value("b", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed tree parameters: ") + e.what());
  }
  return p;
}

inline Json tree_to_json(const AugmentedTree& at, const TreeParams& p) {
  const auto& t = at.tree();
  Json j;
  j["model"] = to_json(t.model());
  j["params"] = params_to_json(p, t.kind());
  j["r0"] = t.r0();
  j["vertex_count"] = t.size();
  Json verts = Json::array();
  for (VertexId v = 0; v < t.size(); ++v) {
    const auto& r = t.rep_point(v);
    verts.push_back({{"id", v},
                     {"level", t.level(v)},
                     {"parent", v == IndexTree::root() ? Json(nullptr) : Json(t.parent(v))},
                     {"label", t.label(v)},
                     {"measure", t.measure(v)},
                     {"rep_point", std::vector<double>(r.data(), r.data() + r.size())},
                     {"radius", t.cell_radius(v)}});
  }
  j["vertices"] = std::move(verts);
  Json edges = Json::array();
  for (VertexId v = 0; v < t.size(); ++v)
    for (VertexId w : at.horizontal_neighbors(v))
      if (w > v) edges.push_back({v, w});
  j["horizontal_edges"] = std::move(edges);
  return j;
}

struct LoadedTree {
  std::shared_ptr<const AugmentedTree> tree;
  TreeParams params;
};

inline LoadedTree tree_from_json(const Json& j) {
  require(j.is_object() && j.contains("model") && j.contains("params"), "tree JSON needs 'model' and 'params'");
  LoadedTree lt;
  lt.params = params_from_json(j.at("params"));
  lt.tree = build_from_params(model_from_json(j.at("model")), lt.params);
  if (j.contains("vertex_count"))
    require(j.at("vertex_count").get<std::size_t>() == lt.tree->tree().size(), "rebuilt tree does not match the stored vertex count");
  return lt;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot read file: " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("file is not valid JSON: " + path);
  }
}

inline Json network_to_json(const Network& net, const TreeParams& p) {
  Json j;
  j["tree"] = {{"model", to_json(net.tree().model())}, {"params", params_to_json(p, net.tree().kind())},
               {"vertex_count", net.tree().size()}};
  j["lambda"] = net.lambda();
  j["log_shift"] = net.log_shift();
  Json edges = Json::array();
  const auto& g = net.graph();
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k)
      if (g.neighbor[k] > v) edges.push_back({v, g.neighbor[k], g.conductance[k]});
  j["edges"] = std::move(edges);
  return j;
}

struct LoadedNetwork {
  std::shared_ptr<const AugmentedTree> tree;
  TreeParams params;
  double lambda = 0.0;
};

inline LoadedNetwork network_from_json(const Json& j) {
  require(j.is_object() && j.contains("tree") && j.contains("lambda"), "network JSON needs 'tree' and 'lambda'");
  const auto lt = tree_from_json(j.at("tree"));
  return {lt.tree, lt.params, j.at("lambda").get<double>()};
}

/// CSV: level,x_id,y_id (each undirected edge once, x_id < y_id).
inline void write_horizontal_edges_csv(const AugmentedTree& at, std::ostream& os) {
  const auto& t = at.tree();
  os << "level,x_id,y_id\n";
  for (VertexId v = 0; v < t.size(); ++v)
    for (VertexId w : at.horizontal_neighbors(v))
      if (w > v) os << t.level(v) << ',' << v << ',' << w << '\n';
}

/// CSV: x,y,c with stored conductances (true value = c * e^{log_shift}).
inline void write_network_edges_csv(const Network& net, std::ostream& os) {
  const auto& g = net.graph();
  os << "x,y,c\n";
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k)
      if (g.neighbor[k] > v) os << v << ',' << g.neighbor[k] << ',' << fmt(g.conductance[k]) << '\n';
}

}  // namespace augtree

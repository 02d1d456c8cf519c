// Canonical model JSON reader/writer.
//
// {"feature_count": int, "feature_names": [str], "base_margin": float,
//  "trees": [[node, ...], ...]}
// node = {"id": int, "cover": float, "leaf": float}                       (leaf)
//      | {"id": int, "cover": float, "split_feature": int, "threshold": float,
//         "left": int, "right": int, "default": "left"|"right"}          (internal)

#include "json.hpp"

#include "treexai/ensemble.hpp"
#include "treexai/errors.hpp"

namespace treexai {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing key '" + key + "'");
  }
  return *it;
}

double as_real(const json& v, const char* key, const std::string& where) {
  if (!v.is_number()) {
    throw ParseError(where + ": '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::int64_t as_int(const json& v, const char* key, const std::string& where) {
  if (!v.is_number_integer()) {
    throw ParseError(where + ": '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

Tree parse_tree(const json& jtree, std::size_t t) {
  const std::string tree_where = "tree " + std::to_string(t);
  if (!jtree.is_array()) {
    throw ParseError(tree_where + ": expected an array of nodes");
  }
  const auto n = jtree.size();
  std::vector<TreeNode> nodes(n);
  std::vector<std::uint8_t> seen(n, 0);
  for (const json& jn : jtree) {
    if (!jn.is_object()) {
      throw ParseError(tree_where + ": node must be an object");
    }
    const std::int64_t id = as_int(require(jn, "id", tree_where), "id", tree_where);
    const std::string where = tree_where + " node " + std::to_string(id);
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw StructuralError(where + ": id out of range [0, " + std::to_string(n) + ")");
    }
    if (seen[static_cast<std::size_t>(id)]++) {
      throw StructuralError(where + ": duplicate id");
    }
    TreeNode& nd = nodes[static_cast<std::size_t>(id)];
    nd.cover = as_real(require(jn, "cover", where), "cover", where);
    if (const auto leaf = jn.find("leaf"); leaf != jn.end()) {
      nd.value = as_real(*leaf, "leaf", where);
      continue;
    }
    const std::int64_t feature = as_int(require(jn, "split_feature", where), "split_feature", where);
    if (feature < 0 || feature > std::numeric_limits<std::int32_t>::max()) {
      throw StructuralError(where + ": split feature " + std::to_string(feature) + " out of range");
    }
    nd.feature = static_cast<std::int32_t>(feature);
    nd.threshold = as_real(require(jn, "threshold", where), "threshold", where);
    const auto child = [&](const char* key) {
      const std::int64_t c = as_int(require(jn, key, where), key, where);
      if (c < 0 || static_cast<std::size_t>(c) >= n) {
        throw StructuralError(where + ": " + key + " child " + std::to_string(c) + " out of range");
      }
      return static_cast<std::int32_t>(c);
    };
    nd.left = child("left");
    nd.right = child("right");
    if (const auto def = jn.find("default"); def != jn.end()) {
      if (*def == "left") {
        nd.default_branch = DefaultBranch::left;
      } else if (*def == "right") {
        nd.default_branch = DefaultBranch::right;
      } else {
        throw ParseError(where + ": 'default' must be \"left\" or \"right\"");
      }
    }
  }
  try {
    return Tree(std::move(nodes));
  } catch (const StructuralError& e) {
    throw StructuralError(tree_where + " " + e.what());
  }
}

}  // namespace

TreeEnsemble parse_model(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) {
    throw ParseError("model document must be a JSON object");
  }
  const std::string top = "model";
  const std::int64_t feature_count = as_int(require(doc, "feature_count", top), "feature_count", top);
  if (feature_count < 0) {
    throw StructuralError("feature_count must be nonnegative");
  }
  std::vector<std::string> names;
  if (const auto it = doc.find("feature_names"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("'feature_names' must be an array");
    for (const json& name : *it) {
      if (!name.is_string()) throw ParseError("'feature_names' entries must be strings");
      names.push_back(name.get<std::string>());
    }
  } else {
    for (std::int64_t j = 0; j < feature_count; ++j) names.push_back("f" + std::to_string(j));
  }
  const double base = doc.contains("base_margin")
                          ? as_real(doc["base_margin"], "base_margin", top)
                          : 0.0;
  const json& jtrees = require(doc, "trees", top);
  if (!jtrees.is_array()) throw ParseError("'trees' must be an array");
  std::vector<Tree> trees;
  trees.reserve(jtrees.size());
  for (std::size_t t = 0; t < jtrees.size(); ++t) {
    trees.push_back(parse_tree(jtrees[t], t));
  }
  return TreeEnsemble(std::move(trees), base, static_cast<std::size_t>(feature_count),
                      std::move(names));
}

std::string serialize_model(const TreeEnsemble& ensemble) {
  json doc;
  doc["feature_count"] = ensemble.feature_count();
  doc["feature_names"] = json::array();
  for (const auto& name : ensemble.feature_names()) doc["feature_names"].push_back(name);
  doc["base_margin"] = ensemble.base_margin();
  json trees = json::array();
  for (const Tree& tree : ensemble.trees()) {
    json jt = json::array();
    const auto nodes = tree.nodes();
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      const TreeNode& nd = nodes[id];
      json jn;
      jn["id"] = id;
      jn["cover"] = nd.cover;
      if (nd.is_leaf()) {
        jn["leaf"] = nd.value;
      } else {
        jn["split_feature"] = nd.feature;
        jn["threshold"] = nd.threshold;
        jn["left"] = nd.left;
        jn["right"] = nd.right;
        jn["default"] = nd.default_branch == DefaultBranch::left ? "left" : "right";
      }
      jt.push_back(std::move(jn));
    }
    trees.push_back(std::move(jt));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

}  // namespace treexai

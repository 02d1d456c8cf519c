#include "treexai/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "treexai/errors.hpp"

namespace treexai {

namespace {

constexpr double kCoverRelTol = 1e-6;

bool covers_match(double parent, double children) {
  const double scale = std::max(std::abs(parent), std::abs(children));
  return std::abs(parent - children) <= kCoverRelTol * scale;
}

std::string node_error(std::size_t id, const std::string& what) {
  return "node " + std::to_string(id) + ": " + what;
}

}  // namespace

std::string_view to_string(Klass k) noexcept {
  return k == Klass::malicious ? "malicious" : "benign";
}

Klass opposite(Klass k) noexcept {
  return k == Klass::malicious ? Klass::benign : Klass::malicious;
}

double logistic(double margin) noexcept {
  if (margin >= 0.0) {
    return 1.0 / (1.0 + std::exp(-margin));
  }
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw StructuralError("tree has no nodes");
  }
  const auto n = nodes_.size();
  std::vector<std::uint8_t> referenced(n, 0);
  for (std::size_t id = 0; id < n; ++id) {
    const TreeNode& nd = nodes_[id];
    if (!std::isfinite(nd.cover) || nd.cover < 0.0) {
      throw StructuralError(node_error(id, "cover must be finite and nonnegative"));
    }
    if (nd.is_leaf()) {
      if (!std::isfinite(nd.value)) {
        throw StructuralError(node_error(id, "leaf value is not finite"));
      }
      continue;
    }
    if (!std::isfinite(nd.threshold)) {
      throw StructuralError(node_error(id, "threshold is not finite"));
    }
    for (const std::int32_t child : {nd.left, nd.right}) {
      if (child <= 0 || static_cast<std::size_t>(child) >= n) {
        throw StructuralError(node_error(id, "child id " + std::to_string(child) + " out of range"));
      }
      if (referenced[static_cast<std::size_t>(child)]++) {
        throw StructuralError(node_error(id, "child " + std::to_string(child) + " has several parents"));
      }
    }
    if (nd.left == nd.right) {
      throw StructuralError(node_error(id, "left and right child coincide"));
    }
    if (!(nd.cover > 0.0)) {
      throw StructuralError(node_error(id, "internal node has zero cover"));
    }
  }

  // Every non-root node has exactly one parent; reachability from the root rules out cycles.
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t visited = 0;
  min_leaf_ = std::numeric_limits<double>::infinity();
  max_leaf_ = -std::numeric_limits<double>::infinity();
  while (!stack.empty()) {
    const auto [id, depth] = stack.back();
    stack.pop_back();
    ++visited;
    depth_ = std::max(depth_, depth);
    const TreeNode& nd = node(id);
    if (nd.is_leaf()) {
      min_leaf_ = std::min(min_leaf_, nd.value);
      max_leaf_ = std::max(max_leaf_, nd.value);
      continue;
    }
    const double child_sum = node(nd.left).cover + node(nd.right).cover;
    if (!covers_match(nd.cover, child_sum)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "cover " << nd.cover << " differs from child sum " << child_sum;
      throw StructuralError(node_error(static_cast<std::size_t>(id), msg.str()));
    }
    stack.emplace_back(nd.right, depth + 1);
    stack.emplace_back(nd.left, depth + 1);
  }
  if (visited != n) {
    throw StructuralError("tree contains " + std::to_string(n - visited) +
                          " node(s) unreachable from the root");
  }
}

std::int32_t Tree::route(std::span<const double> x) const {
  std::int32_t id = 0;
  while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
    const TreeNode& nd = nodes_[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
  }
  return id;
}

TreeEnsemble::TreeEnsemble(std::vector<Tree> trees, double base_margin, std::size_t feature_count,
                           std::vector<std::string> feature_names)
    : trees_(std::move(trees)),
      base_margin_(base_margin),
      feature_count_(feature_count),
      feature_names_(std::move(feature_names)),
      thresholds_(feature_count) {
  if (!std::isfinite(base_margin_)) {
    throw StructuralError("base_margin is not finite");
  }
  if (feature_names_.size() != feature_count_) {
    throw StructuralError("feature_names has " + std::to_string(feature_names_.size()) +
                          " entries but feature_count is " + std::to_string(feature_count_));
  }
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto nodes = trees_[t].nodes();
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      const TreeNode& nd = nodes[id];
      if (nd.is_leaf()) continue;
      if (static_cast<std::size_t>(nd.feature) >= feature_count_) {
        throw StructuralError("tree " + std::to_string(t) + " node " + std::to_string(id) +
                              ": split feature " + std::to_string(nd.feature) +
                              " out of range for feature_count " + std::to_string(feature_count_));
      }
      thresholds_[static_cast<std::size_t>(nd.feature)].push_back(nd.threshold);
    }
  }
  for (auto& ts : thresholds_) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
}

std::optional<std::size_t> TreeEnsemble::feature_index(std::string_view name) const {
  const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names_.begin());
}

void TreeEnsemble::check_sample(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw DimensionError("sample has " + std::to_string(x.size()) + " values, model expects " +
                         std::to_string(feature_count_));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) {
      throw std::invalid_argument("sample value for feature " + std::to_string(j) + " is not finite");
    }
  }
}

double TreeEnsemble::margin(std::span<const double> x) const {
  check_sample(x);
  double m = base_margin_;
  for (const Tree& tree : trees_) {
    m += tree.evaluate(x);
  }
  return m;
}

Prediction TreeEnsemble::predict(std::span<const double> x) const {
  const double m = margin(x);
  return Prediction{m, logistic(m), classify_margin(m)};
}

std::span<const double> TreeEnsemble::feature_thresholds(std::size_t j) const {
  if (j >= feature_count_) {
    throw std::out_of_range("feature index " + std::to_string(j) + " out of range");
  }
  return thresholds_[j];
}

TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open model file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace treexai

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treexai {

enum class Klass : std::uint8_t { benign, malicious };

std::string_view to_string(Klass k) noexcept;
Klass opposite(Klass k) noexcept;

// Decision boundary: malicious iff margin > 0. A margin of exactly 0 is benign.
inline Klass classify_margin(double margin) noexcept {
  return margin > 0.0 ? Klass::malicious : Klass::benign;
}

// One sample. Values are dense and finite.
struct FeatureVector {
  std::vector<double> values;
  std::optional<std::string> class_label;
  std::optional<Klass> binary_label;
};

struct Prediction {
  double margin = 0.0;
  double probability = 0.5;
  Klass klass = Klass::benign;
};

enum class DefaultBranch : std::uint8_t { left, right };

// Flat node record. Internal nodes route value < threshold to `left`,
// everything else to `right`.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  DefaultBranch default_branch = DefaultBranch::left;
  double value = 0.0;  // leaf margin contribution
  double cover = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

// A single regression tree. Node ids are positions in `nodes()`; node 0 is the root.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes);

  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Index of the leaf reached by routing `x`.
  std::int32_t route(std::span<const double> x) const;
  double evaluate(std::span<const double> x) const { return node(route(x)).value; }

  double min_leaf() const noexcept { return min_leaf_; }
  double max_leaf() const noexcept { return max_leaf_; }
  std::size_t depth() const noexcept { return depth_; }

 private:
  std::vector<TreeNode> nodes_;
  double min_leaf_ = 0.0;
  double max_leaf_ = 0.0;
  std::size_t depth_ = 0;
};

// Additive binary-logistic tree ensemble. Immutable after construction.
class TreeEnsemble {
 public:
  // Validates every structural invariant; throws StructuralError on violation.
  TreeEnsemble(std::vector<Tree> trees, double base_margin, std::size_t feature_count,
               std::vector<std::string> feature_names);

  std::span<const Tree> trees() const noexcept { return trees_; }
  double base_margin() const noexcept { return base_margin_; }
  std::size_t feature_count() const noexcept { return feature_count_; }
  std::span<const std::string> feature_names() const noexcept { return feature_names_; }
  const std::string& feature_name(std::size_t j) const { return feature_names_.at(j); }
  std::optional<std::size_t> feature_index(std::string_view name) const;

  // Throws DimensionError on length mismatch, std::invalid_argument on non-finite values.
  void check_sample(std::span<const double> x) const;

  double margin(std::span<const double> x) const;
  Prediction predict(std::span<const double> x) const;

  // Distinct split thresholds used on feature `j`, ascending.
  std::span<const double> feature_thresholds(std::size_t j) const;

  // True if some split anywhere in the ensemble tests feature `j`.
  bool uses_feature(std::size_t j) const { return !feature_thresholds(j).empty(); }

 private:
  std::vector<Tree> trees_;
  double base_margin_;
  std::size_t feature_count_;
  std::vector<std::string> feature_names_;
  std::vector<std::vector<double>> thresholds_;
};

double logistic(double margin) noexcept;

// Canonical model JSON. See README for the schema.
TreeEnsemble parse_model(std::string_view document);
TreeEnsemble load_model(const std::string& path);
std::string serialize_model(const TreeEnsemble& ensemble);

}  // namespace treexai

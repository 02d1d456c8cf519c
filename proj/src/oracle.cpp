#include "treexai/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "treexai/errors.hpp"

namespace treexai {

bool box_contains(const Box& box, std::span<const double> x) {
  if (box.size() != x.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!box[j].contains(x[j])) return false;
  }
  return true;
}

bool box_subset(const Box& inner, const Box& outer) {
  if (inner.size() != outer.size()) return false;
  for (std::size_t j = 0; j < inner.size(); ++j) {
    if (!inner[j].subset_of(outer[j])) return false;
  }
  return true;
}

FeatureDomainSpec::FeatureDomainSpec(std::size_t feature_count)
    : domains_(feature_count, Interval::real_line()) {}

FeatureDomainSpec::FeatureDomainSpec(std::vector<Interval> domains) : domains_(std::move(domains)) {
  for (std::size_t j = 0; j < domains_.size(); ++j) {
    const Interval& d = domains_[j];
    if (std::isnan(d.lo) || std::isnan(d.hi) || !(d.lo <= d.hi)) {
      throw std::invalid_argument("domain for feature " + std::to_string(j) + " is empty");
    }
  }
}

FeatureDomainSpec parse_domains(std::string_view document, const TreeEnsemble& ensemble) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed domain JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_array()) throw ParseError("domain document must be a JSON array");
  std::vector<Interval> domains(ensemble.feature_count(), Interval::real_line());
  for (const json& entry : doc) {
    if (!entry.is_object() || !entry.contains("feature")) {
      throw ParseError("domain entry must be an object with a 'feature' key");
    }
    const json& f = entry["feature"];
    std::size_t j = 0;
    if (f.is_number_integer()) {
      const auto idx = f.get<std::int64_t>();
      if (idx < 0 || static_cast<std::size_t>(idx) >= ensemble.feature_count()) {
        throw SchemaError("domain entry feature index " + std::to_string(idx) + " out of range");
      }
      j = static_cast<std::size_t>(idx);
    } else if (f.is_string()) {
      const auto idx = ensemble.feature_index(f.get<std::string>());
      if (!idx) throw SchemaError("domain entry names unknown feature '" + f.get<std::string>() + "'");
      j = *idx;
    } else {
      throw ParseError("domain entry 'feature' must be an index or a name");
    }
    const auto bound = [&](const char* key, double unbounded) {
      if (!entry.contains(key) || entry[key].is_null()) return unbounded;
      if (!entry[key].is_number()) throw ParseError(std::string("domain '") + key + "' must be a number");
      return entry[key].get<double>();
    };
    domains[j] = Interval{bound("lo", -std::numeric_limits<double>::infinity()),
                          bound("hi", std::numeric_limits<double>::infinity())};
  }
  return FeatureDomainSpec(std::move(domains));
}

FeatureDomainSpec load_domains(const std::string& path, const TreeEnsemble& ensemble) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open domain file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_domains(buf.str(), ensemble);
}

Box make_box(std::span<const double> x, const std::vector<bool>& fixed, const FeatureDomainSpec& domains) {
  if (fixed.size() != x.size() || domains.size() != x.size()) {
    throw DimensionError("make_box: sample, mask and domain sizes differ");
  }
  Box box(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (fixed[j]) {
      box[j] = Interval::point(x[j]);
    } else {
      const Interval& d = domains[j];
      box[j] = Interval{std::min(d.lo, x[j]), std::max(d.hi, x[j])};
    }
  }
  return box;
}

namespace {

// Leaf-value range over the part of `tree` reachable inside `box`.
Interval walk(const Tree& tree, const Box& box, std::vector<std::int32_t>& stack) {
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  stack.clear();
  stack.push_back(0);
  while (!stack.empty()) {
    const TreeNode& nd = tree.node(stack.back());
    stack.pop_back();
    if (nd.is_leaf()) {
      out.lo = std::min(out.lo, nd.value);
      out.hi = std::max(out.hi, nd.value);
      continue;
    }
    const Interval& iv = box[static_cast<std::size_t>(nd.feature)];
    const bool go_left = iv.lo < nd.threshold;
    const bool go_right = iv.hi >= nd.threshold;
    if (go_right) stack.push_back(nd.right);
    if (go_left) stack.push_back(nd.left);
  }
  return out;
}

enum class Side { target, opposite, undecided };

Side side_of(const Interval& m, Klass target) {
  if (target == Klass::malicious) {
    if (m.lo > 0.0) return Side::target;
    if (m.hi <= 0.0) return Side::opposite;
  } else {
    if (m.hi <= 0.0) return Side::target;
    if (m.lo > 0.0) return Side::opposite;
  }
  return Side::undecided;
}

double point_in(const Interval& iv) {
  const bool lo_finite = std::isfinite(iv.lo);
  const bool hi_finite = std::isfinite(iv.hi);
  if (lo_finite && hi_finite) return std::midpoint(iv.lo, iv.hi);
  if (lo_finite) return iv.lo;
  if (hi_finite) return iv.hi;
  return 0.0;
}

// Exact decision by box refinement. The box is split at the threshold of the
// top-most straddled node of the tree whose reachable interval is widest;
// each half only re-analyses the trees that test the split feature.
class Refiner {
 public:

  Refiner(const TreeEnsemble& ensemble, Klass target, const OracleOptions& options)
      : ensemble_(ensemble), target_(target), options_(options), trees_by_feature_(ensemble.feature_count()) {
    const auto trees = ensemble.trees();
    for (std::size_t t = 0; t < trees.size(); ++t) {
      for (const TreeNode& nd : trees[t].nodes()) {
        if (nd.is_leaf()) continue;
        auto& list = trees_by_feature_[static_cast<std::size_t>(nd.feature)];
        if (list.empty() || list.back() != t) list.push_back(t);
      }
    }
  }

  OracleVerdict::Kind run(Box box) {
    std::vector<Interval> trees(ensemble_.trees().size());
    for (std::size_t t = 0; t < trees.size(); ++t) trees[t] = walk(ensemble_.trees()[t], box, stack_);
    return solve(box, trees, sum(trees));
  }

  std::size_t splits() const noexcept { return splits_; }
  std::vector<double>& witness() noexcept { return witness_; }

 private:
  Interval sum(const std::vector<Interval>& trees) const {
    Interval m = Interval::point(ensemble_.base_margin());
    for (const Interval& r : trees) {
      m.lo += r.lo;
      m.hi += r.hi;
    }
    return m;
  }

  // Top-most node of `tree` under `box` with both branches reachable.
  static const TreeNode* straddled(const Tree& tree, const Box& box) {
    std::int32_t id = 0;
    for (;;) {
      const TreeNode& nd = tree.node(id);
      if (nd.is_leaf()) return nullptr;
      const Interval& iv = box[static_cast<std::size_t>(nd.feature)];
      const bool go_left = iv.lo < nd.threshold;
      const bool go_right = iv.hi >= nd.threshold;
      if (go_left && go_right) return &nd;
      id = go_left ? nd.left : nd.right;
    }
  }

  void narrow(Box& box, std::size_t j, const std::vector<Interval>& parent, std::vector<Interval>& out) {
    out = parent;
    for (const std::size_t t : trees_by_feature_[j]) {
      if (out[t].lo != out[t].hi) out[t] = walk(ensemble_.trees()[t], box, stack_);
    }
  }

  OracleVerdict::Kind solve(Box& box, const std::vector<Interval>& trees, const Interval& margin) {
    switch (side_of(margin, target_)) {
      case Side::target:
        return OracleVerdict::Kind::invariant;
      case Side::opposite:
        witness_.resize(box.size());
        for (std::size_t j = 0; j < box.size(); ++j) witness_[j] = point_in(box[j]);
        return OracleVerdict::Kind::counterexample;
      case Side::undecided:
        break;
    }
    if (options_.split_budget != 0 && splits_ >= options_.split_budget) {
      return OracleVerdict::Kind::unknown;
    }
    ++splits_;

    // Undecided implies some tree still has more than one reachable leaf.
    std::size_t chosen = 0;
    double widest = -1.0;
    for (std::size_t t = 0; t < trees.size(); ++t) {
      const double w = trees[t].hi - trees[t].lo;
      if (w > widest) {
        widest = w;
        chosen = t;
      }
    }
    const TreeNode* nd = straddled(ensemble_.trees()[chosen], box);
    const auto j = static_cast<std::size_t>(nd->feature);
    const double threshold = nd->threshold;
    const Interval saved = box[j];
    const Interval lower{saved.lo, std::nextafter(threshold, -std::numeric_limits<double>::infinity())};
    const Interval upper{threshold, saved.hi};

    std::vector<Interval> trees_lower, trees_upper;
    box[j] = lower;
    narrow(box, j, trees, trees_lower);
    box[j] = upper;
    narrow(box, j, trees, trees_upper);
    box[j] = saved;
    const Interval m_lower = sum(trees_lower);
    const Interval m_upper = sum(trees_upper);
    const bool malicious = target_ == Klass::malicious;

    // Visit the half more likely to hold a counterexample first.
    const bool upper_first = malicious ? m_upper.lo < m_lower.lo : m_upper.hi > m_lower.hi;
    struct Half {
      const Interval* iv;
      const std::vector<Interval>* trees;
      const Interval* margin;
    };
    Half halves[2] = {{&lower, &trees_lower, &m_lower}, {&upper, &trees_upper, &m_upper}};
    if (upper_first) std::swap(halves[0], halves[1]);

    bool unknown = false;
    for (const Half& h : halves) {
      box[j] = *h.iv;
      const auto k = solve(box, *h.trees, *h.margin);
      box[j] = saved;
      if (k == OracleVerdict::Kind::counterexample) return k;
      if (k == OracleVerdict::Kind::unknown) unknown = true;
    }
    return unknown ? OracleVerdict::Kind::unknown : OracleVerdict::Kind::invariant;
  }

  const TreeEnsemble& ensemble_;
  Klass target_;
  OracleOptions options_;
  std::vector<std::vector<std::size_t>> trees_by_feature_;
  std::vector<std::int32_t> stack_;
  std::vector<double> witness_;
  std::size_t splits_ = 0;
};

}  // namespace

Interval reachable_interval(const Tree& tree, const Box& box) {
  std::vector<std::int32_t> stack;
  return walk(tree, box, stack);
}

Interval margin_interval(const TreeEnsemble& ensemble, const Box& box) {
  if (box.size() != ensemble.feature_count()) {
    throw DimensionError("box has " + std::to_string(box.size()) + " intervals, model expects " +
                         std::to_string(ensemble.feature_count()));
  }
  std::vector<std::int32_t> stack;
  Interval m = Interval::point(ensemble.base_margin());
  for (const Tree& tree : ensemble.trees()) {
    const Interval r = walk(tree, box, stack);
    m.lo += r.lo;
    m.hi += r.hi;
  }
  return m;
}

OracleVerdict decide_invariance(const TreeEnsemble& ensemble, const Box& box, Klass target,
                                const OracleOptions& options) {
  if (box.size() != ensemble.feature_count()) {
    throw DimensionError("box has " + std::to_string(box.size()) + " intervals, model expects " +
                         std::to_string(ensemble.feature_count()));
  }
  for (const Interval& iv : box) {
    if (!(iv.lo <= iv.hi)) throw std::invalid_argument("box contains an empty interval");
  }
  Refiner refiner(ensemble, target, options);
  OracleVerdict verdict;
  verdict.kind = refiner.run(box);
  verdict.splits = refiner.splits();
  if (verdict.kind == OracleVerdict::Kind::counterexample) {
    verdict.witness = std::move(refiner.witness());
    verdict.margin = ensemble.margin(verdict.witness);
  }
  return verdict;
}

}  // namespace treexai

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treexai/ensemble.hpp"

namespace treexai {

// Closed interval of doubles. Infinite bounds stand for "unbounded"; samples are always finite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval point(double v) noexcept { return {v, v}; }
  static Interval real_line() noexcept { return {}; }

  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  bool subset_of(const Interval& o) const noexcept { return o.lo <= lo && hi <= o.hi; }
  bool is_point() const noexcept { return lo == hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// One interval per feature. A fixed feature is a point interval.
using Box = std::vector<Interval>;

bool box_contains(const Box& box, std::span<const double> x);
bool box_subset(const Box& inner, const Box& outer);

// Global per-feature ranges that a freed feature may take.
class FeatureDomainSpec {
 public:
  FeatureDomainSpec() = default;
  // Every feature ranges over the whole real line.
  explicit FeatureDomainSpec(std::size_t feature_count);
  explicit FeatureDomainSpec(std::vector<Interval> domains);

  std::size_t size() const noexcept { return domains_.size(); }
  const Interval& operator[](std::size_t j) const { return domains_.at(j); }
  std::span<const Interval> domains() const noexcept { return domains_; }

 private:
  std::vector<Interval> domains_;
};

// Domain file: JSON array of {"feature": index-or-name, "lo": number|null, "hi": number|null}.
// Features not listed default to the real line; null bounds are unbounded.
FeatureDomainSpec parse_domains(std::string_view document, const TreeEnsemble& ensemble);
FeatureDomainSpec load_domains(const std::string& path, const TreeEnsemble& ensemble);

// Box fixing `fixed[j]` features to x[j] and freeing the rest to their domain.
// A freed interval is widened to include x[j] so that fixing a feature always
// shrinks the box.
Box make_box(std::span<const double> x, const std::vector<bool>& fixed, const FeatureDomainSpec& domains);

// Hull of the leaf values reachable from the root of `tree` for inputs inside `box`.
Interval reachable_interval(const Tree& tree, const Box& box);

// base_margin plus the sum of per-tree reachable intervals; contains every margin over `box`.
Interval margin_interval(const TreeEnsemble& ensemble, const Box& box);

struct OracleVerdict {
  enum class Kind { invariant, counterexample, unknown };

  Kind kind = Kind::unknown;
  std::vector<double> witness;  // set for counterexamples
  double margin = 0.0;          // margin at the witness
  std::size_t splits = 0;       // refinement splits performed

  bool invariant() const noexcept { return kind == Kind::invariant; }
};

struct OracleOptions {
  // Maximum number of box splits before giving up with `unknown`. 0 = unlimited.
  std::size_t split_budget = 0;
};

// Decides whether every input inside `box` is classified as `target`.
// Exact: refines the box on straddled split thresholds until each cell has a
// decided margin interval. A counterexample witness lies in `box` and is
// classified as the opposite of `target`.
OracleVerdict decide_invariance(const TreeEnsemble& ensemble, const Box& box, Klass target,
                                const OracleOptions& options = {});

}  // namespace treexai

#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <vector>

#include "treexai/ensemble.hpp"
#include "treexai/oracle.hpp"

namespace treexai {

struct FeaturePair {
  std::size_t feature = 0;
  double value = 0.0;

  friend bool operator==(const FeaturePair&, const FeaturePair&) = default;
};

enum class Minimality { proved, unknown };

// A set of fixed feature values that provably forces `target` over the free features.
struct Explanation {
  std::vector<FeaturePair> pairs;  // ascending by feature
  Klass target = Klass::benign;
  Minimality minimality = Minimality::proved;

  std::size_t size() const noexcept { return pairs.size(); }
  std::vector<std::size_t> features() const;
  bool contains(std::size_t feature) const;
};

struct EnumerationResult {
  std::vector<Explanation> explanations;  // sorted by (size, feature indices)
  bool complete = false;
  std::chrono::nanoseconds elapsed{0};
  std::size_t oracle_calls = 0;
};

// Strictly positive per-feature costs. Cheaper features are tried for removal first.
class CostVector {
 public:
  explicit CostVector(std::size_t feature_count);  // all ones
  explicit CostVector(std::vector<double> costs);

  std::span<const double> costs() const noexcept { return costs_; }
  // Ascending cost, ties by feature index.
  std::vector<std::size_t> deletion_order() const;

 private:
  std::vector<double> costs_;
};

// Ascending |phi| with index tie-break, so features with the largest
// attribution are removed last (and thus retained preferentially).
std::vector<std::size_t> attribution_order(std::span<const double> phi);

struct LogicOptions {
  OracleOptions oracle;
};

// Validity: fixing `subset` to x's values forces x's predicted class over `domains`.
bool is_valid(const TreeEnsemble& ensemble, std::span<const double> x, std::span<const std::size_t> subset,
              const FeatureDomainSpec& domains, const LogicOptions& options = {});

// Throws ContractError when `subset` is not valid.
bool is_minimal(const TreeEnsemble& ensemble, std::span<const double> x, std::span<const std::size_t> subset,
                const FeatureDomainSpec& domains, const LogicOptions& options = {});

struct FilterStats {
  std::size_t oracle_calls = 0;
};

// Deletion filter: starting from all features, free each feature in `order`
// and drop it for good when the remainder stays valid.
Explanation one_minimal(const TreeEnsemble& ensemble, std::span<const double> x, const FeatureDomainSpec& domains,
                        std::span<const std::size_t> order, const LogicOptions& options = {},
                        FilterStats* stats = nullptr);

struct EnumerationOptions {
  std::chrono::nanoseconds timeout = std::chrono::hours(1);
  std::size_t cap = 10'000;
  std::vector<std::size_t> order;  // deletion order for shrinking; empty = ascending index
  LogicOptions logic;
};

// All minimal explanations via seed/shrink/block over the monotone validity predicate.
EnumerationResult all_minimal(const TreeEnsemble& ensemble, std::span<const double> x,
                              const FeatureDomainSpec& domains, const EnumerationOptions& options = {});

}  // namespace treexai

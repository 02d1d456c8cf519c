#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "treexai/ensemble.hpp"

namespace treexai {

// Per-feature Shapley values on the margin scale. base + sum(phi) == margin(x).
struct AttributionVector {
  std::vector<double> phi;
  double base = 0.0;

  double total() const noexcept;
};

// Largest feature count accepted by the exponential reference implementation.
inline constexpr std::size_t kBruteForceMaxFeatures = 20;

// Cover-weighted expectation of `tree` given that only the features flagged in
// `known` take their value from `x`.
double expvalue(const Tree& tree, std::span<const double> x, const std::vector<bool>& known);

// Exact Shapley values by summing over every coalition. Reference oracle;
// throws CapacityError above kBruteForceMaxFeatures.
AttributionVector shapley_bruteforce(const TreeEnsemble& ensemble, std::span<const double> x);

// Exact path-dependent Shapley values in O(leaves * depth^2) per tree.
AttributionVector shapley_tree(const TreeEnsemble& ensemble, std::span<const double> x);

// Features with strictly positive attribution.
std::vector<std::size_t> positive_features(const AttributionVector& attribution);

}  // namespace treexai

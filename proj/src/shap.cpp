#include "treexai/shap.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include "treexai/errors.hpp"

namespace treexai {

double AttributionVector::total() const noexcept {
  return std::accumulate(phi.begin(), phi.end(), base);
}

double expvalue(const Tree& tree, std::span<const double> x, const std::vector<bool>& known) {
  // Explicit recursion mirrors the definition; trees are shallow.
  const auto rec = [&](const auto& self, std::int32_t id) -> double {
    const TreeNode& nd = tree.node(id);
    if (nd.is_leaf()) return nd.value;
    const auto j = static_cast<std::size_t>(nd.feature);
    if (known[j]) {
      return self(self, x[j] < nd.threshold ? nd.left : nd.right);
    }
    const TreeNode& l = tree.node(nd.left);
    const TreeNode& r = tree.node(nd.right);
    return (l.cover * self(self, nd.left) + r.cover * self(self, nd.right)) / nd.cover;
  };
  return rec(rec, 0);
}

AttributionVector shapley_bruteforce(const TreeEnsemble& ensemble, std::span<const double> x) {
  ensemble.check_sample(x);
  const std::size_t n = ensemble.feature_count();
  if (n > kBruteForceMaxFeatures) {
    throw CapacityError("brute-force Shapley supports at most " + std::to_string(kBruteForceMaxFeatures) +
                        " features (model has " + std::to_string(n) + "); use shapley_tree");
  }
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> value(subsets);
  std::vector<bool> known(n);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    for (std::size_t j = 0; j < n; ++j) known[j] = (mask >> j) & 1U;
    double f = ensemble.base_margin();
    for (const Tree& tree : ensemble.trees()) f += expvalue(tree, x, known);
    value[mask] = f;
  }

  // weight[s] = s! (n - s - 1)! / n! = 1 / (n * C(n - 1, s))
  std::vector<double> weight(n);
  if (n > 0) {
    double binom = 1.0;
    for (std::size_t s = 0; s < n; ++s) {
      weight[s] = 1.0 / (static_cast<double>(n) * binom);
      binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
    }
  }

  AttributionVector out;
  out.base = value[0];
  out.phi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const double delta = value[mask | bit] - value[mask];
      if (delta != 0.0) phi += weight[static_cast<std::size_t>(std::popcount(mask))] * delta;
    }
    out.phi[i] = phi;
  }
  return out;
}

namespace {

struct PathElement {
  std::int32_t feature;
  double zero_fraction;
  double one_fraction;
  double pweight;
};

void extend_path(PathElement* path, std::size_t depth, double zero_fraction, double one_fraction,
                 std::int32_t feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  const double d1 = static_cast<double>(depth + 1);
  for (std::size_t k = depth; k-- > 0;) {
    path[k + 1].pweight += one_fraction * path[k].pweight * static_cast<double>(k + 1) / d1;
    path[k].pweight = zero_fraction * path[k].pweight * static_cast<double>(depth - k) / d1;
  }
}

void unwind_path(PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next_one = path[depth].pweight;
  for (std::size_t k = depth; k-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[k].pweight;
      path[k].pweight = next_one * d1 / (static_cast<double>(k + 1) * one);
      next_one = tmp - path[k].pweight * zero * static_cast<double>(depth - k) / d1;
    } else {
      path[k].pweight = path[k].pweight * d1 / (zero * static_cast<double>(depth - k));
    }
  }
  for (std::size_t k = index; k < depth; ++k) {
    path[k].feature = path[k + 1].feature;
    path[k].zero_fraction = path[k + 1].zero_fraction;
    path[k].one_fraction = path[k + 1].one_fraction;
  }
}

// Total permutation weight of the path with element `index` removed.
double unwound_path_sum(const PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next_one = path[depth].pweight;
  double total = 0.0;
  for (std::size_t k = depth; k-- > 0;) {
    if (one != 0.0) {
      const double tmp = next_one * d1 / (static_cast<double>(k + 1) * one);
      total += tmp;
      next_one = path[k].pweight - tmp * zero * (static_cast<double>(depth - k) / d1);
    } else if (zero != 0.0) {
      total += (path[k].pweight / zero) / (static_cast<double>(depth - k) / d1);
    }
  }
  return total;
}

class PathShap {
 public:
  PathShap(const Tree& tree, std::span<const double> x, std::vector<double>& phi)
      : tree_(tree), x_(x), phi_(phi) {
    const std::size_t d = tree.depth() + 3;
    storage_.resize(d * (d + 1) / 2 + 1);
  }

  void run() { recurse(0, storage_.data(), 0, 1.0, 1.0, -1); }

 private:
  void recurse(std::int32_t id, PathElement* parent_path, std::size_t depth, double zero_fraction,
               double one_fraction, std::int32_t feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);

    const TreeNode& nd = tree_.node(id);
    if (nd.is_leaf()) {
      for (std::size_t k = 1; k <= depth; ++k) {
        const double w = unwound_path_sum(path, depth, k);
        const PathElement& el = path[k];
        phi_[static_cast<std::size_t>(el.feature)] += w * (el.one_fraction - el.zero_fraction) * nd.value;
      }
      return;
    }

    const auto j = static_cast<std::size_t>(nd.feature);
    const bool go_left = x_[j] < nd.threshold;
    const std::int32_t hot = go_left ? nd.left : nd.right;
    const std::int32_t cold = go_left ? nd.right : nd.left;
    const double hot_zero = tree_.node(hot).cover / nd.cover;
    const double cold_zero = tree_.node(cold).cover / nd.cover;

    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    std::size_t index = 0;
    while (index <= depth && path[index].feature != nd.feature) ++index;
    if (index <= depth) {
      incoming_zero = path[index].zero_fraction;
      incoming_one = path[index].one_fraction;
      unwind_path(path, depth, index);
      --depth;
    }
    // A branch that is neither followed nor covered contributes to no coalition.
    if (hot_zero * incoming_zero != 0.0 || incoming_one != 0.0) {
      recurse(hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, nd.feature);
    }
    if (cold_zero * incoming_zero != 0.0) {
      recurse(cold, path, depth + 1, cold_zero * incoming_zero, 0.0, nd.feature);
    }
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::vector<double>& phi_;
  std::vector<PathElement> storage_;
};

}  // namespace

AttributionVector shapley_tree(const TreeEnsemble& ensemble, std::span<const double> x) {
  ensemble.check_sample(x);
  AttributionVector out;
  out.phi.assign(ensemble.feature_count(), 0.0);
  out.base = ensemble.base_margin();
  const std::vector<bool> none(ensemble.feature_count(), false);
  for (const Tree& tree : ensemble.trees()) {
    out.base += expvalue(tree, x, none);
    PathShap(tree, x, out.phi).run();
  }
  return out;
}

std::vector<std::size_t> positive_features(const AttributionVector& attribution) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < attribution.phi.size(); ++j) {
    if (attribution.phi[j] > 0.0) out.push_back(j);
  }
  return out;
}

}  // namespace treexai

// Fixtures and brute-force reference implementations shared by the tests.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "treexai/ensemble.hpp"
#include "treexai/oracle.hpp"

namespace fixtures {

using treexai::Box;
using treexai::Klass;
using treexai::TreeEnsemble;

// base 0
// Tree1: f0<5 ? +1.0 (10) : (f1<2 ? -2.0 (3) : +0.5 (7))
// Tree2: f2<0 ? -1.0 (8)  : +1.0 (12)
TreeEnsemble fix_a();
const char* fix_a_json();
TreeEnsemble single_leaf(double value, std::size_t feature_count = 3);

struct RandomShape {
  std::size_t min_features = 2;
  std::size_t max_features = 6;
  std::size_t max_trees = 4;
  std::size_t max_depth = 3;
  bool integer_covers = true;  // small integers; otherwise arbitrary positive reals
  bool grid_values = true;     // thresholds and leaves on a coarse grid (ties and zero margins happen)
};

TreeEnsemble random_ensemble(std::mt19937_64& rng, const RandomShape& shape);
// Values on the threshold grid, including exact threshold hits.
std::vector<double> random_sample(std::mt19937_64& rng, std::size_t feature_count);

// min and max margin over `box`, by enumerating every cell of the
// threshold grid that intersects it.
struct BruteRange {
  double lo;
  double hi;
  bool target_everywhere;
};
BruteRange brute_range(const TreeEnsemble& e, const Box& box, Klass target);

// Validity of every subset (bitmask) by cell enumeration.
std::vector<bool> brute_validity(const TreeEnsemble& e, const std::vector<double>& x,
                                 const treexai::FeatureDomainSpec& domains);
// Minimal valid subsets as bitmasks, ascending by (popcount, mask).
std::vector<std::uint32_t> brute_minimal(const std::vector<bool>& valid, std::size_t n);
std::vector<std::size_t> mask_features(std::uint32_t mask, std::size_t n);
std::uint32_t features_mask(const std::vector<std::size_t>& features);

// Synthetic intrusion-detection workload: a logistic boosted model trained on
// generated flows with 8 attack classes plus benign.
struct Workload {
  TreeEnsemble model;
  std::vector<std::vector<double>> samples;
  std::vector<Klass> labels;
  std::vector<std::string> classes;
};
struct WorkloadShape {
  std::size_t features = 92;
  std::size_t trees = 100;
  std::size_t depth = 10;
  double learning_rate = 0.35;
  std::size_t train_rows = 4000;
  std::size_t test_rows = 1000;
  std::uint64_t seed = 7;
};
Workload synthetic_workload(const WorkloadShape& shape = {});

}  // namespace fixtures

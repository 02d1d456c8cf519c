#include "fixtures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace fixtures {

using treexai::Interval;
using treexai::Tree;
using treexai::TreeNode;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TreeNode leaf(double value, double cover) {
  TreeNode n;
  n.value = value;
  n.cover = cover;
  return n;
}

TreeNode split(std::int32_t feature, double threshold, std::int32_t left, std::int32_t right, double cover) {
  TreeNode n;
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  n.cover = cover;
  return n;
}

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

}  // namespace

TreeEnsemble fix_a() {
  Tree t1({split(0, 5.0, 1, 2, 20), leaf(1.0, 10), split(1, 2.0, 3, 4, 10), leaf(-2.0, 3), leaf(0.5, 7)});
  Tree t2({split(2, 0.0, 1, 2, 20), leaf(-1.0, 8), leaf(1.0, 12)});
  return TreeEnsemble({t1, t2}, 0.0, 3, default_names(3));
}

const char* fix_a_json() {
  return R"({
  "feature_count": 3,
  "feature_names": ["f0", "f1", "f2"],
  "base_margin": 0.0,
  "trees": [
    [
      {"id": 0, "split_feature": 0, "threshold": 5.0, "left": 1, "right": 2, "default": "left", "cover": 20},
      {"id": 1, "leaf": 1.0, "cover": 10},
      {"id": 2, "split_feature": 1, "threshold": 2.0, "left": 3, "right": 4, "default": "left", "cover": 10},
      {"id": 3, "leaf": -2.0, "cover": 3},
      {"id": 4, "leaf": 0.5, "cover": 7}
    ],
    [
      {"id": 0, "split_feature": 2, "threshold": 0.0, "left": 1, "right": 2, "default": "left", "cover": 20},
      {"id": 1, "leaf": -1.0, "cover": 8},
      {"id": 2, "leaf": 1.0, "cover": 12}
    ]
  ]
})";
}

TreeEnsemble single_leaf(double value, std::size_t feature_count) {
  return TreeEnsemble({Tree({leaf(value, 1.0)})}, 0.0, feature_count, default_names(feature_count));
}

namespace {

const std::vector<double> kGrid = {-1.0, -0.5, 0.0, 0.5, 1.0};

double pick(std::mt19937_64& rng, const std::vector<double>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

TreeEnsemble random_ensemble(std::mt19937_64& rng, const RandomShape& shape) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(shape.min_features, shape.max_features)(rng);
  const std::size_t trees = std::uniform_int_distribution<std::size_t>(1, shape.max_trees)(rng);
  std::uniform_int_distribution<std::int32_t> feat(0, static_cast<std::int32_t>(n) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Tree> out;
  for (std::size_t t = 0; t < trees; ++t) {
    std::vector<TreeNode> nodes;
    // Returns the id of the subtree root; covers are filled bottom-up.
    std::function<std::int32_t(std::size_t)> grow = [&](std::size_t depth) -> std::int32_t {
      const auto id = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      const bool is_split = depth < shape.max_depth && unit(rng) < (depth == 0 ? 0.9 : 0.65);
      if (!is_split) {
        const double value = shape.grid_values ? 0.5 * std::uniform_int_distribution<int>(-4, 4)(rng)
                                               : std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        const double cover = shape.integer_covers ? std::uniform_int_distribution<int>(1, 10)(rng)
                                                  : std::uniform_real_distribution<double>(0.05, 5.0)(rng);
        nodes[id] = leaf(value, cover);
        return id;
      }
      const std::int32_t f = feat(rng);
      const double threshold = shape.grid_values ? pick(rng, kGrid) : std::uniform_real_distribution<double>(-1, 1)(rng);
      const std::int32_t l = grow(depth + 1);
      const std::int32_t r = grow(depth + 1);
      nodes[id] = split(f, threshold, l, r, nodes[l].cover + nodes[r].cover);
      return id;
    };
    grow(0);
    out.emplace_back(std::move(nodes));
  }
  const double base = shape.grid_values ? pick(rng, {-0.5, 0.0, 0.0, 0.25}) : unit(rng) - 0.5;
  return TreeEnsemble(std::move(out), base, n, default_names(n));
}

std::vector<double> random_sample(std::mt19937_64& rng, std::size_t feature_count) {
  static const std::vector<double> values = {-1.5, -1.0, -0.75, -0.5, 0.0, 0.25, 0.5, 1.0, 1.5};
  std::vector<double> x(feature_count);
  for (auto& v : x) v = pick(rng, values);
  return x;
}

namespace {

// One representative point per threshold cell of `feature` that meets `iv`.
std::vector<double> cell_points(const std::set<double>& cuts, const Interval& iv) {
  std::vector<double> bounds = {-kInf};
  bounds.insert(bounds.end(), cuts.begin(), cuts.end());
  bounds.push_back(kInf);
  std::vector<double> points;
  // Cell k is [bounds[k], bounds[k+1]) (the first one is open below).
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const double a = std::max(bounds[k], iv.lo);
    const double b_excl = bounds[k + 1];
    const double b = std::min(b_excl == kInf ? kInf : std::nextafter(b_excl, -kInf), iv.hi);
    if (a > b) continue;
    if (std::isfinite(a)) {
      points.push_back(a);
    } else if (std::isfinite(b)) {
      points.push_back(b);
    } else {
      points.push_back(0.0);
    }
  }
  return points;
}

std::vector<std::set<double>> scan_thresholds(const TreeEnsemble& e) {
  std::vector<std::set<double>> cuts(e.feature_count());
  for (const auto& tree : e.trees()) {
    for (const auto& node : tree.nodes()) {
      if (!node.is_leaf()) cuts[static_cast<std::size_t>(node.feature)].insert(node.threshold);
    }
  }
  return cuts;
}

}  // namespace

BruteRange brute_range(const TreeEnsemble& e, const Box& box, Klass target) {
  const auto cuts = scan_thresholds(e);
  const std::size_t n = e.feature_count();
  std::vector<std::vector<double>> points(n);
  for (std::size_t j = 0; j < n; ++j) points[j] = cell_points(cuts[j], box[j]);
  BruteRange r{kInf, -kInf, true};
  std::vector<double> x(n);
  std::function<void(std::size_t)> visit = [&](std::size_t j) {
    if (j == n) {
      double m = e.base_margin();
      for (const auto& t : e.trees()) m += t.evaluate(x);
      r.lo = std::min(r.lo, m);
      r.hi = std::max(r.hi, m);
      if (treexai::classify_margin(m) != target) r.target_everywhere = false;
      return;
    }
    for (const double v : points[j]) {
      x[j] = v;
      visit(j + 1);
    }
  };
  visit(0);
  return r;
}

std::vector<bool> brute_validity(const TreeEnsemble& e, const std::vector<double>& x,
                                 const treexai::FeatureDomainSpec& domains) {
  const std::size_t n = e.feature_count();
  const Klass target = e.predict(x).klass;
  std::vector<bool> valid(std::size_t{1} << n);
  for (std::uint32_t mask = 0; mask < valid.size(); ++mask) {
    Box box(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1u) {
        box[j] = Interval::point(x[j]);
      } else {
        box[j] = {std::min(domains[j].lo, x[j]), std::max(domains[j].hi, x[j])};
      }
    }
    valid[mask] = brute_range(e, box, target).target_everywhere;
  }
  return valid;
}

std::vector<std::uint32_t> brute_minimal(const std::vector<bool>& valid, std::size_t n) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask = 0; mask < valid.size(); ++mask) {
    if (!valid[mask]) continue;
    bool minimal = true;
    for (std::size_t j = 0; j < n && minimal; ++j) {
      if ((mask >> j & 1u) && valid[mask & ~(1u << j)]) minimal = false;
    }
    if (minimal) out.push_back(mask);
  }
  std::stable_sort(out.begin(), out.end(), [](std::uint32_t a, std::uint32_t b) {
    const int pa = std::popcount(a);
    const int pb = std::popcount(b);
    return pa != pb ? pa < pb : false;
  });
  return out;
}

std::vector<std::size_t> mask_features(std::uint32_t mask, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (mask >> j & 1u) out.push_back(j);
  }
  return out;
}

std::uint32_t features_mask(const std::vector<std::size_t>& features) {
  std::uint32_t mask = 0;
  for (const auto j : features) mask |= 1u << j;
  return mask;
}

// ---- synthetic boosted workload -------------------------------------------------

namespace {

const std::vector<std::string> kClasses = {"Benign",   "HTTPFlood", "ICMPFlood",      "SYNFlood", "SYNScan",
                                           "SlowrateDoS", "TCPConnectScan", "UDPFlood", "UDPScan"};

struct Generator {
  std::size_t features;
  std::vector<std::vector<double>> means;  // [class][feature]
  std::vector<std::vector<double>> scale;  // [class][feature]

  Generator(std::size_t n, std::mt19937_64& rng) : features(n) {
    std::uniform_real_distribution<double> shift(1.0, 3.0);
    std::uniform_int_distribution<std::size_t> feat(0, n - 1);
    std::bernoulli_distribution sign(0.5);
    means.assign(kClasses.size(), std::vector<double>(n, 0.0));
    scale.assign(kClasses.size(), std::vector<double>(n, 1.0));
    for (std::size_t c = 0; c < kClasses.size(); ++c) {
      // Attack classes differ from benign traffic in a handful of flow features.
      const std::size_t informative = c == 0 ? 6 : 10;
      for (std::size_t k = 0; k < informative; ++k) {
        const std::size_t j = feat(rng);
        means[c][j] += (sign(rng) ? 1.0 : -1.0) * shift(rng);
        scale[c][j] = 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      }
    }
  }

  std::size_t draw_class(std::mt19937_64& rng) const {
    // Roughly 40% benign, the rest spread over the attacks.
    if (std::bernoulli_distribution(0.4)(rng)) return 0;
    return std::uniform_int_distribution<std::size_t>(1, kClasses.size() - 1)(rng);
  }

  std::vector<double> draw(std::size_t c, std::mt19937_64& rng) const {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(features);
    for (std::size_t j = 0; j < features; ++j) {
      const double v = means[c][j] + scale[c][j] * z(rng);
      // Quarter of the features are counters: rounded and nonnegative.
      x[j] = j % 4 == 3 ? std::max(0.0, std::round(4.0 * v + 8.0)) : v;
    }
    return x;
  }
};

class Booster {
 public:
  Booster(const std::vector<std::vector<double>>& rows, const std::vector<double>& y, const WorkloadShape& shape)
      : rows_(rows), y_(y), shape_(shape), n_(rows.front().size()) {
    constexpr std::size_t kCuts = 32;
    cuts_.resize(n_);
    bins_.assign(rows_.size() * n_, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      std::vector<double> col(rows_.size());
      for (std::size_t i = 0; i < rows_.size(); ++i) col[i] = rows_[i][j];
      std::sort(col.begin(), col.end());
      std::set<double> cut;
      for (std::size_t q = 1; q < kCuts; ++q) {
        const std::size_t k = q * col.size() / kCuts;
        if (k > 0 && col[k - 1] < col[k]) cut.insert(0.5 * (col[k - 1] + col[k]));
      }
      cuts_[j].assign(cut.begin(), cut.end());
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        bins_[i * n_ + j] = static_cast<std::uint8_t>(
            std::upper_bound(cuts_[j].begin(), cuts_[j].end(), rows_[i][j]) - cuts_[j].begin());
      }
    }
  }

  TreeEnsemble train() {
    std::vector<double> margin(rows_.size(), 0.0);
    std::vector<Tree> trees;
    g_.resize(rows_.size());
    h_.resize(rows_.size());
    for (std::size_t t = 0; t < shape_.trees; ++t) {
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        const double p = treexai::logistic(margin[i]);
        g_[i] = p - y_[i];
        h_[i] = std::max(p * (1.0 - p), 1e-16);
      }
      nodes_.clear();
      std::vector<std::size_t> all(rows_.size());
      std::iota(all.begin(), all.end(), 0);
      build(all, 0);
      Tree tree(nodes_);
      for (std::size_t i = 0; i < rows_.size(); ++i) margin[i] += tree.evaluate(rows_[i]);
      trees.push_back(std::move(tree));
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < n_; ++j) names.push_back("flow_" + std::to_string(j));
    return TreeEnsemble(std::move(trees), 0.0, n_, std::move(names));
  }

 private:
  static constexpr double kLambda = 1.0;
  static constexpr double kMinChildWeight = 1.0;  // XGBoost default

  // Returns the new node id; the node cover is the sum of hessians below it.
  std::int32_t build(const std::vector<std::size_t>& idx, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    double G = 0.0, H = 0.0;
    for (const auto i : idx) {
      G += g_[i];
      H += h_[i];
    }
    std::size_t best_f = 0, best_k = 0;
    double best_gain = 1e-9;
    if (depth < shape_.depth && idx.size() >= 2) {
      const double parent = G * G / (H + kLambda);
      std::vector<double> hg, hh;
      for (std::size_t j = 0; j < n_; ++j) {
        const std::size_t nb = cuts_[j].size() + 1;
        hg.assign(nb, 0.0);
        hh.assign(nb, 0.0);
        for (const auto i : idx) {
          const auto b = bins_[i * n_ + j];
          hg[b] += g_[i];
          hh[b] += h_[i];
        }
        double gl = 0.0, hl = 0.0;
        for (std::size_t k = 0; k + 1 < nb; ++k) {
          gl += hg[k];
          hl += hh[k];
          const double gr = G - gl, hr = H - hl;
          if (hl < kMinChildWeight || hr < kMinChildWeight) continue;
          const double gain = gl * gl / (hl + kLambda) + gr * gr / (hr + kLambda) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_f = j;
            best_k = k;
          }
        }
      }
    }
    if (best_gain <= 1e-9) {
      nodes_[id] = leaf(-shape_.learning_rate * G / (H + kLambda), H);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (const auto i : idx) (bins_[i * n_ + best_f] <= best_k ? left : right).push_back(i);
    const std::int32_t l = build(left, depth + 1);
    const std::int32_t r = build(right, depth + 1);
    nodes_[id] = split(static_cast<std::int32_t>(best_f), cuts_[best_f][best_k], l, r,
                       nodes_[l].cover + nodes_[r].cover);
    return id;
  }

  const std::vector<std::vector<double>>& rows_;
  const std::vector<double>& y_;
  WorkloadShape shape_;
  std::size_t n_;
  std::vector<std::vector<double>> cuts_;
  std::vector<std::uint8_t> bins_;
  std::vector<double> g_, h_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Workload synthetic_workload(const WorkloadShape& shape) {
  std::mt19937_64 rng(shape.seed);
  const Generator gen(shape.features, rng);
  std::vector<std::vector<double>> train;
  std::vector<double> y;
  for (std::size_t i = 0; i < shape.train_rows; ++i) {
    const std::size_t c = gen.draw_class(rng);
    train.push_back(gen.draw(c, rng));
    y.push_back(c == 0 ? 0.0 : 1.0);
  }
  Booster booster(train, y, shape);
  Workload w{booster.train(), {}, {}, {}};
  for (std::size_t i = 0; i < shape.test_rows; ++i) {
    const std::size_t c = gen.draw_class(rng);
    w.samples.push_back(gen.draw(c, rng));
    w.labels.push_back(c == 0 ? Klass::benign : Klass::malicious);
    w.classes.push_back(kClasses[c]);
  }
  return w;
}

}  // namespace fixtures

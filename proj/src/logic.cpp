#include "treexai/logic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "treexai/errors.hpp"
#include "treexai/seed_map.hpp"

namespace treexai {

std::vector<std::size_t> Explanation::features() const {
  std::vector<std::size_t> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.feature);
  return out;
}

bool Explanation::contains(std::size_t feature) const {
  return std::any_of(pairs.begin(), pairs.end(), [&](const FeaturePair& p) { return p.feature == feature; });
}

CostVector::CostVector(std::size_t feature_count) : costs_(feature_count, 1.0) {}

CostVector::CostVector(std::vector<double> costs) : costs_(std::move(costs)) {
  for (std::size_t j = 0; j < costs_.size(); ++j) {
    if (!(costs_[j] > 0.0) || !std::isfinite(costs_[j])) {
      throw std::invalid_argument("cost of feature " + std::to_string(j) + " must be finite and positive");
    }
  }
}

std::vector<std::size_t> CostVector::deletion_order() const {
  std::vector<std::size_t> order(costs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs_[a] < costs_[b]; });
  return order;
}

std::vector<std::size_t> attribution_order(std::span<const double> phi) {
  std::vector<std::size_t> order(phi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(phi[a]) < std::abs(phi[b]); });
  return order;
}

namespace {

// Validity checks for one sample against its predicted class.
class Probe {
 public:
  Probe(const TreeEnsemble& ensemble, std::span<const double> x, const FeatureDomainSpec& domains,
        const LogicOptions& options)
      : ensemble_(ensemble), x_(x), domains_(domains), options_(options) {
    ensemble_.check_sample(x_);
    if (domains_.size() != ensemble_.feature_count()) {
      throw DimensionError("domain spec size does not match the model's feature count");
    }
    target_ = ensemble_.predict(x_).klass;
  }

  OracleVerdict::Kind check(const std::vector<bool>& fixed) {
    ++calls_;
    const Box box = make_box(x_, fixed, domains_);
    const auto kind = decide_invariance(ensemble_, box, target_, options_.oracle).kind;
    if (kind == OracleVerdict::Kind::unknown) saw_unknown_ = true;
    return kind;
  }

  bool valid(const std::vector<bool>& fixed) { return check(fixed) == OracleVerdict::Kind::invariant; }

  // Same as check() on `fixed` with feature j freed, given that `fixed` itself
  // is valid. Inside the threshold cell of x[j] every tree routes as it does at
  // x[j], so only the parts of the freed interval outside that cell are queried.
  OracleVerdict::Kind check_without(std::vector<bool>& fixed, std::size_t j) {
    ++calls_;
    fixed[j] = false;
    Box box = make_box(x_, fixed, domains_);
    fixed[j] = true;
    const auto cuts = ensemble_.feature_thresholds(j);
    const auto above = std::upper_bound(cuts.begin(), cuts.end(), x_[j]);
    const Interval freed = box[j];
    std::vector<Interval> parts;
    if (above != cuts.begin()) {
      const double cell_lo = *std::prev(above);
      if (freed.lo < cell_lo) {
        parts.push_back({freed.lo, std::nextafter(cell_lo, -std::numeric_limits<double>::infinity())});
      }
    }
    if (above != cuts.end() && freed.hi >= *above) parts.push_back({*above, freed.hi});
    auto kind = OracleVerdict::Kind::invariant;
    for (const Interval& part : parts) {
      box[j] = part;
      const auto k = decide_invariance(ensemble_, box, target_, options_.oracle).kind;
      if (k == OracleVerdict::Kind::counterexample) return k;
      if (k == OracleVerdict::Kind::unknown) {
        saw_unknown_ = true;
        kind = k;
      }
    }
    return kind;
  }

  std::vector<bool> mask_of(std::span<const std::size_t> subset) const {
    std::vector<bool> fixed(x_.size(), false);
    for (const std::size_t j : subset) {
      if (j >= x_.size()) throw std::out_of_range("feature index " + std::to_string(j) + " out of range");
      fixed[j] = true;
    }
    return fixed;
  }

  Explanation explanation(const std::vector<bool>& fixed, Minimality m) const {
    Explanation e;
    e.target = target_;
    e.minimality = m;
    for (std::size_t j = 0; j < fixed.size(); ++j) {
      if (fixed[j]) e.pairs.push_back({j, x_[j]});
    }
    return e;
  }

  std::size_t calls() const noexcept { return calls_; }
  bool saw_unknown() const noexcept { return saw_unknown_; }
  Klass target() const noexcept { return target_; }

 private:
  const TreeEnsemble& ensemble_;
  std::span<const double> x_;
  const FeatureDomainSpec& domains_;
  const LogicOptions& options_;
  Klass target_ = Klass::benign;
  std::size_t calls_ = 0;
  bool saw_unknown_ = false;
};

void check_order(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) {
    throw ContractError("deletion order must list every feature exactly once");
  }
  std::vector<bool> seen(n, false);
  for (const std::size_t j : order) {
    if (j >= n || seen[j]) throw ContractError("deletion order must be a permutation of the features");
    seen[j] = true;
  }
}

bool explanation_less(const Explanation& a, const Explanation& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.pairs[i].feature != b.pairs[i].feature) return a.pairs[i].feature < b.pairs[i].feature;
  }
  return false;
}

}  // namespace

bool is_valid(const TreeEnsemble& ensemble, std::span<const double> x, std::span<const std::size_t> subset,
              const FeatureDomainSpec& domains, const LogicOptions& options) {
  Probe probe(ensemble, x, domains, options);
  return probe.valid(probe.mask_of(subset));
}

bool is_minimal(const TreeEnsemble& ensemble, std::span<const double> x, std::span<const std::size_t> subset,
                const FeatureDomainSpec& domains, const LogicOptions& options) {
  Probe probe(ensemble, x, domains, options);
  std::vector<bool> fixed = probe.mask_of(subset);
  if (!probe.valid(fixed)) {
    throw ContractError("is_minimal called on a subset that is not a valid explanation");
  }
  for (std::size_t j = 0; j < fixed.size(); ++j) {
    if (fixed[j] && probe.check_without(fixed, j) == OracleVerdict::Kind::invariant) return false;
  }
  return true;
}

Explanation one_minimal(const TreeEnsemble& ensemble, std::span<const double> x, const FeatureDomainSpec& domains,
                        std::span<const std::size_t> order, const LogicOptions& options, FilterStats* stats) {
  Probe probe(ensemble, x, domains, options);
  check_order(order, ensemble.feature_count());
  std::vector<bool> fixed(ensemble.feature_count(), true);
  for (const std::size_t j : order) {
    if (probe.check_without(fixed, j) == OracleVerdict::Kind::invariant) fixed[j] = false;
  }
  if (stats) stats->oracle_calls = probe.calls();
  return probe.explanation(fixed, probe.saw_unknown() ? Minimality::unknown : Minimality::proved);
}

EnumerationResult all_minimal(const TreeEnsemble& ensemble, std::span<const double> x,
                              const FeatureDomainSpec& domains, const EnumerationOptions& options) {
  using Clock = SeedMap::Clock;
  const auto start = Clock::now();
  const auto deadline = start + options.timeout;
  const std::size_t n = ensemble.feature_count();

  Probe probe(ensemble, x, domains, options.logic);
  std::vector<std::size_t> order = options.order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  check_order(order, n);

  EnumerationResult result;
  SeedMap map(n);
  std::vector<bool> seed;
  bool exhausted = false;
  bool capped = false;
  bool interrupted = false;

  while (!interrupted) {
    if (Clock::now() >= deadline) break;
    const auto status = map.next_seed(seed, deadline);
    if (status == SeedMap::Status::exhausted) {
      exhausted = true;
      break;
    }
    if (status == SeedMap::Status::timed_out || Clock::now() >= deadline) break;

    if (!probe.valid(seed)) {
      // The seed is maximal among unexplored sets, so every proper superset
      // contains a known explanation: the seed is a maximal invalid set.
      std::vector<std::size_t> members;
      for (std::size_t j = 0; j < n; ++j) {
        if (seed[j]) members.push_back(j);
      }
      map.block_subsets(members);
      continue;
    }
    if (result.explanations.size() >= options.cap) {
      capped = true;
      break;
    }
    bool unknown = false;
    for (const std::size_t j : order) {
      if (!seed[j]) continue;
      if (Clock::now() >= deadline) {
        interrupted = true;
        break;
      }
      const auto kind = probe.check_without(seed, j);
      if (kind == OracleVerdict::Kind::invariant) {
        seed[j] = false;
      } else {
        unknown = unknown || kind == OracleVerdict::Kind::unknown;
      }
    }
    if (interrupted) break;
    Explanation e = probe.explanation(seed, unknown ? Minimality::unknown : Minimality::proved);
    const auto members = e.features();
    map.block_supersets(members);
    result.explanations.push_back(std::move(e));
  }

  std::sort(result.explanations.begin(), result.explanations.end(), explanation_less);
  result.complete = exhausted && !capped && !probe.saw_unknown();
  result.oracle_calls = probe.calls();
  result.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  return result;
}

}  // namespace treexai

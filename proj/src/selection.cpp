#include "treexai/selection.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "treexai/errors.hpp"

namespace treexai {

std::string_view to_string(SelectionKind kind) noexcept {
  return kind == SelectionKind::tp ? "TP" : "FP";
}

bool AlertSet::used_fallback() const noexcept {
  for (const auto& c : classes) {
    if (c.repeated > 0) return true;
  }
  return false;
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % bound;
}

AlertSet select_alerts(std::span<const Prediction> predictions, std::span<const Klass> labels,
                       std::span<const std::string> class_labels, std::size_t quota, std::uint64_t seed,
                       SelectionKind kind) {
  if (predictions.size() != labels.size() || labels.size() != class_labels.size()) {
    throw DimensionError("select_alerts: predictions, labels and class labels differ in length");
  }
  if (quota == 0) throw std::invalid_argument("select_alerts: quota must be at least 1");

  const Klass wanted_label = kind == SelectionKind::tp ? Klass::malicious : Klass::benign;
  std::map<std::string, std::vector<std::size_t>> pools;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != wanted_label) continue;
    auto& pool = pools[class_labels[i]];
    if (predictions[i].klass == Klass::malicious) pool.push_back(i);
  }

  AlertSet set;
  set.seed = seed;
  set.per_class_quota = quota;
  set.kind = kind;
  SeededRng rng(seed);
  for (auto& [label, pool] : pools) {
    if (pool.empty()) {
      set.empty_classes.push_back(label);
      continue;
    }
    ClassDraw draw{label, pool.size(), 0, 0};
    // Partial Fisher-Yates: the first `take` slots become the sample.
    const std::size_t take = std::min(quota, pool.size());
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[pick]);
      set.entries.push_back({pool[k], label, kind, false});
    }
    draw.distinct = take;
    for (std::size_t k = take; k < quota; ++k) {
      const std::size_t pick = static_cast<std::size_t>(rng.below(pool.size()));
      set.entries.push_back({pool[pick], label, kind, true});
      ++draw.repeated;
    }
    set.classes.push_back(std::move(draw));
  }
  if (set.entries.empty()) {
    throw EmptySelectionError(std::string("no eligible ") + std::string(to_string(kind)) +
                              " samples in any class");
  }
  return set;
}

}  // namespace treexai

#include "treexai/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "treexai/errors.hpp"

namespace treexai {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

SparsityReport sparsity_report(const SizeGroups& sizes) {
  SparsityReport report;
  for (const auto& [klass, methods] : sizes) {
    for (const auto& [method, values] : methods) {
      if (values.empty()) {
        report.warnings.push_back("sparsity: no samples for class '" + klass + "' method '" + method +
                                  "'; group omitted");
        continue;
      }
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      SparsityRow row;
      row.class_label = klass;
      row.method = method;
      row.count = values.size();
      row.min = *std::min_element(values.begin(), values.end());
      row.max = *std::max_element(values.begin(), values.end());
      row.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
      row.median = quantile_sorted(sorted, 0.5);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::vector<ClassShapStability> shap_stability(const AttributionGroups& attributions, std::size_t topk) {
  std::vector<ClassShapStability> out;
  for (const auto& [klass, vectors] : attributions) {
    if (vectors.empty()) continue;
    const std::size_t n = vectors.front().size();
    ClassShapStability s;
    s.class_label = klass;
    s.samples = vectors.size();
    s.features.assign(n, FeatureSpread{std::numeric_limits<double>::infinity(), 0.0,
                                       -std::numeric_limits<double>::infinity()});
    for (const auto& phi : vectors) {
      if (phi.size() != n) {
        throw DimensionError("shap_stability: attribution vectors of class '" + klass + "' differ in length");
      }
      for (std::size_t j = 0; j < n; ++j) {
        s.features[j].min = std::min(s.features[j].min, phi[j]);
        s.features[j].max = std::max(s.features[j].max, phi[j]);
        s.features[j].mean += phi[j];
      }
    }
    for (auto& f : s.features) {
      f.mean /= static_cast<double>(vectors.size());
      // Summation rounding must not push the mean outside [min, max].
      f.mean = std::clamp(f.mean, f.min, f.max);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.features[a].mean > s.features[b].mean; });
    order.resize(std::min(topk, n));
    s.top = std::move(order);
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<double>* OccurrenceMatrix::row(const std::string& class_label) const {
  const auto it = std::find(classes.begin(), classes.end(), class_label);
  if (it == classes.end()) return nullptr;
  return &percent[static_cast<std::size_t>(it - classes.begin())];
}

OccurrenceMatrix vote_occurrence(const EnumerationGroups& groups, std::size_t feature_count) {
  OccurrenceMatrix m;
  m.feature_count = feature_count;
  for (const auto& [klass, samples] : groups) {
    std::vector<double> sum(feature_count, 0.0);
    std::size_t used = 0;
    std::size_t incomplete = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto& sample = samples[s];
      if (sample.explanations.empty()) {
        m.warnings.push_back("occurrence: class '" + klass + "' sample " + std::to_string(s) +
                             " has no explanations; excluded");
        continue;
      }
      std::vector<std::size_t> hits(feature_count, 0);
      for (const auto& expl : sample.explanations) {
        for (const std::size_t j : expl) {
          if (j >= feature_count) throw std::out_of_range("occurrence: feature index out of range");
          ++hits[j];
        }
      }
      const auto total = static_cast<double>(sample.explanations.size());
      for (std::size_t j = 0; j < feature_count; ++j) sum[j] += static_cast<double>(hits[j]) / total;
      ++used;
      if (!sample.complete) ++incomplete;
    }
    if (used == 0) {
      m.warnings.push_back("occurrence: class '" + klass + "' has no usable samples; omitted");
      continue;
    }
    std::vector<double> pct(feature_count);
    for (std::size_t j = 0; j < feature_count; ++j) {
      pct[j] = std::clamp(100.0 * sum[j] / static_cast<double>(used), 0.0, 100.0);
    }
    m.classes.push_back(klass);
    m.percent.push_back(std::move(pct));
    m.samples.push_back(used);
    m.incomplete.push_back(incomplete);
  }
  return m;
}

std::vector<ClassDivergence> divergence(const OccurrenceMatrix& occurrence,
                                        const std::map<std::string, std::vector<double>>& shap_means,
                                        const DivergenceOptions& options) {
  std::vector<ClassDivergence> out;
  for (std::size_t c = 0; c < occurrence.classes.size(); ++c) {
    const std::string& klass = occurrence.classes[c];
    const auto it = shap_means.find(klass);
    if (it == shap_means.end()) continue;
    const auto& occ = occurrence.percent[c];
    const auto& shap = it->second;
    if (shap.size() != occ.size()) {
      throw DimensionError("divergence: occurrence and SHAP rows of class '" + klass + "' differ in length");
    }
    ClassDivergence d;
    d.class_label = klass;
    for (std::size_t j = 0; j < occ.size(); ++j) {
      if (occ[j] > options.occurrence_threshold) {
        d.rows.push_back({j, occ[j], shap[j], shap[j] < options.near_zero_epsilon});
      }
    }
    std::stable_sort(d.rows.begin(), d.rows.end(), [](const DivergenceRow& a, const DivergenceRow& b) {
      return a.occurrence_pct > b.occurrence_pct;
    });

    std::vector<std::size_t> order(shap.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return shap[a] > shap[b]; });
    order.resize(std::min(options.topk, order.size()));
    d.shap_topk = order;
    if (!order.empty()) {
      const auto hit = std::count_if(order.begin(), order.end(), [&](std::size_t j) { return occ[j] > 0.0; });
      d.shap_topk_containment = static_cast<double>(hit) / static_cast<double>(order.size());
    }
    out.push_back(std::move(d));
  }
  return out;
}

RuntimeRow runtime_stats(const std::string& method, std::vector<double> durations) {
  if (durations.empty()) throw std::invalid_argument("runtime_stats: no timings for method '" + method + "'");
  std::sort(durations.begin(), durations.end());
  RuntimeRow row;
  row.method = method;
  row.count = durations.size();
  row.min = durations.front();
  row.max = durations.back();
  row.mean = std::accumulate(durations.begin(), durations.end(), 0.0) / static_cast<double>(durations.size());
  row.mean = std::clamp(row.mean, row.min, row.max);
  row.median = quantile_sorted(durations, 0.5);
  row.p25 = quantile_sorted(durations, 0.25);
  row.p75 = quantile_sorted(durations, 0.75);
  const double iqr = row.p75 - row.p25;
  const double lo_fence = row.p25 - 1.5 * iqr;
  const double hi_fence = row.p75 + 1.5 * iqr;
  for (const double d : durations) {
    if (d < lo_fence || d > hi_fence) row.outliers.push_back(d);
  }
  return row;
}

std::vector<RuntimeRow> runtime_report(const std::map<std::string, std::vector<double>>& durations) {
  std::vector<RuntimeRow> out;
  for (const auto& [method, values] : durations) out.push_back(runtime_stats(method, values));
  return out;
}

}  // namespace treexai

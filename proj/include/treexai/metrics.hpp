#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace treexai {

// ---- sparsity -------------------------------------------------------------

struct SparsityRow {
  std::string class_label;
  std::string method;
  std::size_t count = 0;
  std::size_t min = 0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t max = 0;
};

struct SparsityReport {
  std::vector<SparsityRow> rows;       // ordered by (class, method)
  std::vector<std::string> warnings;   // one per omitted empty group
};

// sizes[class][method] = explanation cardinalities of that group's samples.
using SizeGroups = std::map<std::string, std::map<std::string, std::vector<std::size_t>>>;

SparsityReport sparsity_report(const SizeGroups& sizes);

// ---- SHAP stability -------------------------------------------------------

struct FeatureSpread {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct ClassShapStability {
  std::string class_label;
  std::size_t samples = 0;
  std::vector<FeatureSpread> features;  // indexed by feature
  std::vector<std::size_t> top;         // highest mean first, ties by index
};

// phi vectors grouped by class; every vector in a class must have the same length.
using AttributionGroups = std::map<std::string, std::vector<std::vector<double>>>;

std::vector<ClassShapStability> shap_stability(const AttributionGroups& attributions, std::size_t topk = 5);

// ---- occurrence of features across all minimal explanations ----------------

struct SampleExplanations {
  std::vector<std::vector<std::size_t>> explanations;  // feature sets
  bool complete = true;
};

using EnumerationGroups = std::map<std::string, std::vector<SampleExplanations>>;

struct OccurrenceMatrix {
  std::size_t feature_count = 0;
  std::vector<std::string> classes;
  std::vector<std::vector<double>> percent;  // [class][feature] in [0, 100]
  std::vector<std::size_t> samples;          // contributing samples per class
  std::vector<std::size_t> incomplete;       // of which enumeration was cut short
  std::vector<std::string> warnings;

  // Row for `class_label`, or nullptr.
  const std::vector<double>* row(const std::string& class_label) const;
};

// Per sample: share of its minimal explanations that contain the feature.
// Per class: unweighted mean of the sample shares, times 100.
OccurrenceMatrix vote_occurrence(const EnumerationGroups& groups, std::size_t feature_count);

// ---- divergence between occurrence and attribution ----------------------------

struct DivergenceOptions {
  double occurrence_threshold = 80.0;  // percent
  double near_zero_epsilon = 0.01;     // margin scale
  std::size_t topk = 5;
};

struct DivergenceRow {
  std::size_t feature = 0;
  double occurrence_pct = 0.0;
  double mean_shap = 0.0;
  bool flagged = false;
};

struct ClassDivergence {
  std::string class_label;
  std::vector<DivergenceRow> rows;  // features above the occurrence threshold, by descending occurrence
  std::vector<std::size_t> shap_topk;
  double shap_topk_containment = 0.0;
};

// shap_means[class] = per-feature mean attribution. Classes missing from
// either input are skipped.
std::vector<ClassDivergence> divergence(const OccurrenceMatrix& occurrence,
                                        const std::map<std::string, std::vector<double>>& shap_means,
                                        const DivergenceOptions& options = {});

// ---- runtime ------------------------------------------------------------------

struct RuntimeRow {
  std::string method;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> outliers;  // beyond 1.5 IQR from the quartiles, ascending
};

// Linear-interpolated quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

RuntimeRow runtime_stats(const std::string& method, std::vector<double> durations);
std::vector<RuntimeRow> runtime_report(const std::map<std::string, std::vector<double>>& durations);

}  // namespace treexai

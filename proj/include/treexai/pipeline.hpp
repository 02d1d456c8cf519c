#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "treexai/ensemble.hpp"
#include "treexai/metrics.hpp"
#include "treexai/selection.hpp"

namespace treexai {

enum class ExplainMode { shap, one_minimal, all_minimal };
enum class DeletionOrder { cost, attribution };

ExplainMode parse_mode(const std::string& text);
std::string_view to_string(ExplainMode mode) noexcept;

struct RunConfig {
  std::string model_path;
  std::string data_path;
  std::string label_col = "label";
  std::string class_col = "attack";
  ExplainMode mode = ExplainMode::one_minimal;
  std::size_t per_class = 11;
  std::uint64_t seed = 0;
  double timeout_secs = 3600.0;  // per-sample budget of all-minimal enumeration
  std::size_t cap = 10'000;
  std::optional<std::string> domains_path;
  std::optional<std::string> costs_path;
  DeletionOrder order = DeletionOrder::cost;
  std::size_t split_budget = 0;
  DivergenceOptions divergence;
  SelectionKind select = SelectionKind::tp;
  std::filesystem::path out;
  std::size_t threads = 0;  // 0 = hardware concurrency
  bool timings = true;      // false writes zero durations (for byte-reproducible bundles)

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// Rows of a CSV projected onto the model's feature order.
struct Dataset {
  std::vector<std::vector<double>> rows;
  std::vector<Klass> labels;               // empty when no label column was requested
  std::vector<std::string> class_labels;   // empty when no class column was requested
};

// Throws SchemaError when model features or requested columns are missing,
// or when a feature cell is not numeric.
Dataset load_dataset(const std::string& path, const TreeEnsemble& ensemble,
                     const std::optional<std::string>& label_col, const std::optional<std::string>& class_col);

// Accepts 0/1, benign/malicious, normal/attack (case-insensitive).
Klass parse_binary_label(const std::string& text);

// Runs fn(i) for i in [0, n) on `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// JSON-lines predictions, one per CSV row, in row order.
void cmd_predict(const RunConfig& config, std::ostream& out);

// Alert selection followed by one explainer; writes alerts.json, per-entry
// records and runtime.csv into config.out.
void cmd_explain(const RunConfig& config);

// Both explainers plus every report; the bundle is written atomically to config.out.
void cmd_evaluate(const RunConfig& config);

}  // namespace treexai

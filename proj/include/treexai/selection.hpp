#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treexai/ensemble.hpp"

namespace treexai {

// TP: predicted and labeled malicious. FP: predicted malicious, labeled benign.
enum class SelectionKind : std::uint8_t { tp, fp };

std::string_view to_string(SelectionKind kind) noexcept;

struct AlertEntry {
  std::size_t sample_id = 0;
  std::string class_label;
  SelectionKind kind = SelectionKind::tp;
  bool repeated = false;  // drawn by the with-replacement fallback
};

struct ClassDraw {
  std::string class_label;
  std::size_t pool_size = 0;
  std::size_t distinct = 0;
  std::size_t repeated = 0;
};

struct AlertSet {
  std::vector<AlertEntry> entries;  // grouped by class (ascending label), draw order within a class
  std::uint64_t seed = 0;
  std::size_t per_class_quota = 0;
  SelectionKind kind = SelectionKind::tp;
  std::vector<ClassDraw> classes;           // classes that contributed entries
  std::vector<std::string> empty_classes;   // classes present in the data with no eligible sample

  bool used_fallback() const noexcept;
};

// Seeded uniform integers, identical across standard library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// Stratified per-class draw: `quota` samples per class without replacement,
// topped up with replacement when a class pool is smaller than the quota.
// Throws EmptySelectionError when no class has an eligible sample.
AlertSet select_alerts(std::span<const Prediction> predictions, std::span<const Klass> labels,
                       std::span<const std::string> class_labels, std::size_t quota, std::uint64_t seed,
                       SelectionKind kind);

}  // namespace treexai

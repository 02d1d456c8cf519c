// JSON records and CSV reports of the report bundle.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "treexai/ensemble.hpp"
#include "treexai/logic.hpp"
#include "treexai/metrics.hpp"
#include "treexai/selection.hpp"
#include "treexai/shap.hpp"

namespace treexai::records {

using nlohmann::json;

json pairs(const Explanation& e, const TreeEnsemble& ensemble);
json entry_header(const AlertEntry& entry, std::size_t position);
json one_minimal(const AlertEntry& entry, std::size_t position, const Explanation& e, std::int64_t elapsed_us,
                 std::size_t oracle_calls, const TreeEnsemble& ensemble);
json enumeration(const EnumerationResult& r, std::int64_t elapsed_us, const TreeEnsemble& ensemble);
json attribution(const AlertEntry& entry, std::size_t position, const AttributionVector& a, double margin,
                 std::int64_t elapsed_us, const TreeEnsemble& ensemble);
json alerts(const AlertSet& set);

void write_json(const std::filesystem::path& path, const json& doc);

void write_stability_csv(const std::filesystem::path& path, const std::vector<ClassShapStability>& stability,
                         const OccurrenceMatrix& occurrence, const TreeEnsemble& ensemble);
void write_shap_top_csv(const std::filesystem::path& path, const std::vector<ClassShapStability>& stability,
                        const TreeEnsemble& ensemble);
void write_divergence_csv(const std::filesystem::path& path, const std::vector<ClassDivergence>& rows,
                          const TreeEnsemble& ensemble);
void write_runtime_csv(const std::filesystem::path& path, const std::vector<RuntimeRow>& rows);
void write_sparsity_csv(const std::filesystem::path& path, const SparsityReport& report);

// Zero-padded file stem for the entry at `position` among `total` entries.
std::string entry_stem(std::size_t position, std::size_t total);

}  // namespace treexai::records

#include "records.hpp"

#include <fstream>
#include <stdexcept>

#include "treexai/csv.hpp"

namespace treexai::records {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

json pairs(const Explanation& e, const TreeEnsemble& ensemble) {
  json arr = json::array();
  for (const auto& p : e.pairs) {
    arr.push_back({{"feature", p.feature}, {"name", ensemble.feature_name(p.feature)}, {"value", p.value}});
  }
  return arr;
}

json entry_header(const AlertEntry& entry, std::size_t position) {
  return {{"entry", position},
          {"sample_id", entry.sample_id},
          {"class_label", entry.class_label},
          {"selection_kind", std::string(to_string(entry.kind))},
          {"repeated", entry.repeated}};
}

json one_minimal(const AlertEntry& entry, std::size_t position, const Explanation& e, std::int64_t elapsed_us,
                 std::size_t oracle_calls, const TreeEnsemble& ensemble) {
  json doc = entry_header(entry, position);
  doc["target"] = std::string(to_string(e.target));
  doc["pairs"] = pairs(e, ensemble);
  doc["minimal"] = e.minimality == Minimality::proved;
  doc["elapsed_us"] = elapsed_us;
  doc["oracle_calls"] = oracle_calls;
  return doc;
}

json enumeration(const EnumerationResult& r, std::int64_t elapsed_us, const TreeEnsemble& ensemble) {
  json list = json::array();
  for (const auto& e : r.explanations) {
    list.push_back({{"pairs", pairs(e, ensemble)}, {"minimal", e.minimality == Minimality::proved}});
  }
  return {{"explanations", std::move(list)},
          {"complete", r.complete},
          {"count", r.explanations.size()},
          {"elapsed_us", elapsed_us},
          {"oracle_calls", r.oracle_calls}};
}

json attribution(const AlertEntry& entry, std::size_t position, const AttributionVector& a, double margin,
                 std::int64_t elapsed_us, const TreeEnsemble& ensemble) {
  json doc = entry_header(entry, position);
  doc["base"] = a.base;
  doc["margin"] = margin;
  json phi = json::array();
  for (std::size_t j = 0; j < a.phi.size(); ++j) {
    phi.push_back({{"feature", j}, {"name", ensemble.feature_name(j)}, {"value", a.phi[j]}});
  }
  doc["phi"] = std::move(phi);
  doc["positive"] = positive_features(a);
  doc["elapsed_us"] = elapsed_us;
  return doc;
}

json alerts(const AlertSet& set) {
  json entries = json::array();
  for (const auto& e : set.entries) {
    entries.push_back({{"sample_id", e.sample_id},
                       {"class_label", e.class_label},
                       {"selection_kind", std::string(to_string(e.kind))},
                       {"repeated", e.repeated}});
  }
  json classes = json::array();
  for (const auto& c : set.classes) {
    classes.push_back({{"class_label", c.class_label},
                       {"pool_size", c.pool_size},
                       {"distinct", c.distinct},
                       {"repeated", c.repeated}});
  }
  return {{"seed", set.seed},
          {"per_class_quota", set.per_class_quota},
          {"selection_kind", std::string(to_string(set.kind))},
          {"entries", std::move(entries)},
          {"classes", std::move(classes)},
          {"empty_classes", set.empty_classes}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_stability_csv(const std::filesystem::path& path, const std::vector<ClassShapStability>& stability,
                         const OccurrenceMatrix& occurrence, const TreeEnsemble& ensemble) {
  auto out = open_out(path);
  CsvWriter csv(out);
  csv.row({"class", "feature", "shap_min", "shap_mean", "shap_max", "vote_occurrence_pct"});
  for (const auto& s : stability) {
    const auto* occ = occurrence.row(s.class_label);
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      const auto& f = s.features[j];
      csv.row({s.class_label, ensemble.feature_name(j), format_number(f.min), format_number(f.mean),
               format_number(f.max), occ ? format_number((*occ)[j]) : std::string()});
    }
  }
}

void write_shap_top_csv(const std::filesystem::path& path, const std::vector<ClassShapStability>& stability,
                        const TreeEnsemble& ensemble) {
  auto out = open_out(path);
  CsvWriter csv(out);
  csv.row({"class", "rank", "feature", "shap_min", "shap_mean", "shap_max"});
  for (const auto& s : stability) {
    for (std::size_t r = 0; r < s.top.size(); ++r) {
      const auto& f = s.features[s.top[r]];
      csv.row({s.class_label, std::to_string(r + 1), ensemble.feature_name(s.top[r]), format_number(f.min),
               format_number(f.mean), format_number(f.max)});
    }
  }
}

void write_divergence_csv(const std::filesystem::path& path, const std::vector<ClassDivergence>& rows,
                          const TreeEnsemble& ensemble) {
  auto out = open_out(path);
  CsvWriter csv(out);
  csv.row({"class", "feature", "occurrence_pct", "mean_shap", "flagged", "shap_topk_containment"});
  for (const auto& d : rows) {
    const std::string containment = format_number(d.shap_topk_containment);
    if (d.rows.empty()) {
      csv.row({d.class_label, "", "", "", "", containment});
      continue;
    }
    for (const auto& r : d.rows) {
      csv.row({d.class_label, ensemble.feature_name(r.feature), format_number(r.occurrence_pct),
               format_number(r.mean_shap), r.flagged ? "true" : "false", containment});
    }
  }
}

void write_runtime_csv(const std::filesystem::path& path, const std::vector<RuntimeRow>& rows) {
  auto out = open_out(path);
  CsvWriter csv(out);
  csv.row({"method", "count", "mean_s", "median_s", "p25_s", "p75_s", "min_s", "max_s", "outliers_s"});
  for (const auto& r : rows) {
    std::string outliers;
    for (std::size_t i = 0; i < r.outliers.size(); ++i) {
      if (i) outliers += ';';
      outliers += format_number(r.outliers[i]);
    }
    csv.row({r.method, std::to_string(r.count), format_number(r.mean), format_number(r.median),
             format_number(r.p25), format_number(r.p75), format_number(r.min), format_number(r.max), outliers});
  }
}

void write_sparsity_csv(const std::filesystem::path& path, const SparsityReport& report) {
  auto out = open_out(path);
  CsvWriter csv(out);
  csv.row({"class", "method", "count", "min", "mean", "median", "max"});
  for (const auto& r : report.rows) {
    csv.row({r.class_label, r.method, std::to_string(r.count), std::to_string(r.min), format_number(r.mean),
             format_number(r.median), std::to_string(r.max)});
  }
}

std::string entry_stem(std::size_t position, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(total == 0 ? 0 : total - 1).size());
  std::string digits = std::to_string(position);
  return std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace treexai::records

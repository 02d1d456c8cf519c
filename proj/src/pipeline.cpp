#include "treexai/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "records.hpp"
#include "treexai/csv.hpp"
#include "treexai/errors.hpp"
#include "treexai/logic.hpp"
#include "treexai/oracle.hpp"
#include "treexai/shap.hpp"

#ifndef TREEXAI_VERSION
#define TREEXAI_VERSION "0.0.0"
#endif

namespace treexai {

namespace fs = std::filesystem;
using records::json;

ExplainMode parse_mode(const std::string& text) {
  if (text == "shap") return ExplainMode::shap;
  if (text == "one-minimal") return ExplainMode::one_minimal;
  if (text == "all-minimal") return ExplainMode::all_minimal;
  throw std::invalid_argument("unknown mode '" + text + "' (expected shap, one-minimal or all-minimal)");
}

std::string_view to_string(ExplainMode mode) noexcept {
  switch (mode) {
    case ExplainMode::shap:
      return "shap";
    case ExplainMode::one_minimal:
      return "one-minimal";
    case ExplainMode::all_minimal:
      return "all-minimal";
  }
  return "?";
}

void RunConfig::validate() const {
  if (per_class < 1) throw std::invalid_argument("--per-class must be at least 1");
  if (!(timeout_secs > 0.0) || !std::isfinite(timeout_secs)) {
    throw std::invalid_argument("--timeout-secs must be positive and finite");
  }
  if (cap < 1) throw std::invalid_argument("--cap must be at least 1");
  if (!(divergence.near_zero_epsilon >= 0.0)) throw std::invalid_argument("--near-zero-eps must be nonnegative");
  if (!(divergence.occurrence_threshold >= 0.0 && divergence.occurrence_threshold <= 100.0)) {
    throw std::invalid_argument("--occurrence-threshold must lie in [0, 100]");
  }
  if (divergence.topk < 1) throw std::invalid_argument("--topk must be at least 1");
}

Klass parse_binary_label(const std::string& text) {
  std::string t;
  for (const char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (t == "0" || t == "0.0" || t == "benign" || t == "normal" || t == "false") return Klass::benign;
  if (t == "1" || t == "1.0" || t == "malicious" || t == "attack" || t == "true") return Klass::malicious;
  throw SchemaError("unrecognized binary label '" + text + "'");
}

namespace {

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  if (first < last && *first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (first == last || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw SchemaError("row " + std::to_string(row) + ", column '" + column + "': '" + cell +
                      "' is not a finite number");
  }
  return v;
}

}  // namespace

Dataset load_dataset(const std::string& path, const TreeEnsemble& ensemble,
                     const std::optional<std::string>& label_col, const std::optional<std::string>& class_col) {
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> columns;
  std::vector<std::string> missing;
  for (const auto& name : ensemble.feature_names()) {
    const auto c = table.column(name);
    if (c) {
      columns.push_back(*c);
    } else {
      missing.push_back(name);
    }
  }
  std::optional<std::size_t> label_idx;
  std::optional<std::size_t> class_idx;
  if (label_col) {
    label_idx = table.column(*label_col);
    if (!label_idx) missing.push_back(*label_col);
  }
  if (class_col) {
    class_idx = table.column(*class_col);
    if (!class_idx) missing.push_back(*class_col);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw SchemaError("data file '" + path + "' is missing column(s): " + list);
  }

  Dataset data;
  data.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& rec = table.rows[r];
    std::vector<double> x(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      x[j] = parse_cell(rec[columns[j]], r, table.header[columns[j]]);
    }
    data.rows.push_back(std::move(x));
    if (label_idx) data.labels.push_back(parse_binary_label(rec[*label_idx]));
    if (class_idx) data.class_labels.push_back(rec[*class_idx]);
  }
  return data;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void cmd_predict(const RunConfig& config, std::ostream& out) {
  const TreeEnsemble ensemble = load_model(config.model_path);
  const Dataset data = load_dataset(config.data_path, ensemble, std::nullopt, std::nullopt);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const Prediction p = ensemble.predict(data.rows[i]);
    const json rec = {{"sample_id", i},
                      {"margin", p.margin},
                      {"probability", p.probability},
                      {"klass", std::string(to_string(p.klass))}};
    out << rec.dump() << '\n';
  }
}

namespace {

using Clock = std::chrono::steady_clock;

struct Session {
  TreeEnsemble ensemble;
  Dataset data;
  std::vector<Prediction> predictions;
  FeatureDomainSpec domains;
  CostVector costs;
  AlertSet alerts;
};

CostVector load_costs(const std::string& path, const TreeEnsemble& ensemble) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open cost file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed cost JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ParseError("cost file must be a JSON object mapping feature names to costs");
  std::vector<double> costs(ensemble.feature_count(), 1.0);
  for (const auto& [name, value] : doc.items()) {
    const auto j = ensemble.feature_index(name);
    if (!j) throw SchemaError("cost file names unknown feature '" + name + "'");
    if (!value.is_number()) throw ParseError("cost of '" + name + "' must be a number");
    costs[*j] = value.get<double>();
  }
  return CostVector(std::move(costs));
}

Session open_session(const RunConfig& config) {
  config.validate();
  TreeEnsemble ensemble = load_model(config.model_path);
  Dataset data = load_dataset(config.data_path, ensemble, config.label_col, config.class_col);
  FeatureDomainSpec domains = config.domains_path ? load_domains(*config.domains_path, ensemble)
                                                  : FeatureDomainSpec(ensemble.feature_count());
  CostVector costs = config.costs_path ? load_costs(*config.costs_path, ensemble)
                                       : CostVector(ensemble.feature_count());
  std::vector<Prediction> predictions;
  predictions.reserve(data.rows.size());
  for (const auto& x : data.rows) predictions.push_back(ensemble.predict(x));
  AlertSet alerts = select_alerts(predictions, data.labels, data.class_labels, config.per_class, config.seed,
                                  config.select);
  return Session{std::move(ensemble), std::move(data), std::move(predictions), std::move(domains),
                 std::move(costs), std::move(alerts)};
}

std::chrono::nanoseconds timeout_of(const RunConfig& config) {
  // Clamp so that now() + timeout cannot overflow.
  const double secs = std::min(config.timeout_secs, 1e9);
  return std::chrono::nanoseconds(static_cast<std::int64_t>(secs * 1e9));
}

template <typename F>
auto timed(bool enabled, std::int64_t& elapsed_us, F&& f) {
  const auto start = Clock::now();
  auto result = f();
  elapsed_us = enabled ? std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count() : 0;
  return result;
}

struct EntryResult {
  AttributionVector attribution;
  std::int64_t shap_us = 0;
  Explanation one;
  std::size_t one_calls = 0;
  std::int64_t one_us = 0;
  EnumerationResult all;
  std::int64_t all_us = 0;
};

std::vector<std::size_t> deletion_order(const RunConfig& config, const Session& s, const AttributionVector* attr) {
  if (config.order == DeletionOrder::attribution && attr) return attribution_order(attr->phi);
  return s.costs.deletion_order();
}

// Writes into `<out>.partial` and renames on success; removes the partial directory on failure.
template <typename F>
void write_atomically(const fs::path& out, F&& body) {
  if (out.empty()) throw std::invalid_argument("--out is required");
  fs::path tmp = out;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    body(tmp);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
  fs::remove_all(out);
  fs::rename(tmp, out);
}

std::vector<double> seconds(const std::vector<std::int64_t>& us) {
  std::vector<double> out;
  out.reserve(us.size());
  for (const auto v : us) out.push_back(static_cast<double>(v) * 1e-6);
  return out;
}

}  // namespace

void cmd_explain(const RunConfig& config) {
  const Session s = open_session(config);
  const auto& entries = s.alerts.entries;
  std::vector<EntryResult> results(entries.size());
  EnumerationOptions enum_opts;
  enum_opts.timeout = timeout_of(config);
  enum_opts.cap = config.cap;
  enum_opts.logic.oracle.split_budget = config.split_budget;

  parallel_for(entries.size(), config.threads, [&](std::size_t i) {
    const auto& x = s.data.rows[entries[i].sample_id];
    EntryResult& r = results[i];
    switch (config.mode) {
      case ExplainMode::shap:
        r.attribution = timed(config.timings, r.shap_us, [&] { return shapley_tree(s.ensemble, x); });
        break;
      case ExplainMode::one_minimal: {
        AttributionVector attr;
        if (config.order == DeletionOrder::attribution) attr = shapley_tree(s.ensemble, x);
        const auto order = deletion_order(config, s, &attr);
        FilterStats stats;
        r.one = timed(config.timings, r.one_us,
                      [&] { return one_minimal(s.ensemble, x, s.domains, order, enum_opts.logic, &stats); });
        r.one_calls = stats.oracle_calls;
        break;
      }
      case ExplainMode::all_minimal: {
        EnumerationOptions opts = enum_opts;
        opts.order = s.costs.deletion_order();
        r.all = timed(config.timings, r.all_us, [&] { return all_minimal(s.ensemble, x, s.domains, opts); });
        break;
      }
    }
  });

  write_atomically(config.out, [&](const fs::path& dir) {
    records::write_json(dir / "alerts.json", records::alerts(s.alerts));
    const fs::path sub = dir / (config.mode == ExplainMode::shap ? "attributions" : "explanations");
    fs::create_directories(sub);
    std::vector<std::int64_t> us;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const auto& r = results[i];
      const fs::path file = sub / (records::entry_stem(i, entries.size()) + ".json");
      switch (config.mode) {
        case ExplainMode::shap:
          records::write_json(file, records::attribution(e, i, r.attribution, s.predictions[e.sample_id].margin,
                                                         r.shap_us, s.ensemble));
          us.push_back(r.shap_us);
          break;
        case ExplainMode::one_minimal:
          records::write_json(file, records::one_minimal(e, i, r.one, r.one_us, r.one_calls, s.ensemble));
          us.push_back(r.one_us);
          break;
        case ExplainMode::all_minimal: {
          json doc = records::entry_header(e, i);
          doc.update(records::enumeration(r.all, r.all_us, s.ensemble));
          records::write_json(file, doc);
          us.push_back(r.all_us);
          break;
        }
      }
    }
    records::write_runtime_csv(dir / "runtime.csv", runtime_report({{std::string(to_string(config.mode)), seconds(us)}}));
  });
}

void cmd_evaluate(const RunConfig& config) {
  const Session s = open_session(config);
  const auto& entries = s.alerts.entries;
  const std::size_t n = s.ensemble.feature_count();
  std::vector<EntryResult> results(entries.size());
  EnumerationOptions enum_opts;
  enum_opts.timeout = timeout_of(config);
  enum_opts.cap = config.cap;
  enum_opts.logic.oracle.split_budget = config.split_budget;

  parallel_for(entries.size(), config.threads, [&](std::size_t i) {
    const auto& x = s.data.rows[entries[i].sample_id];
    EntryResult& r = results[i];
    r.attribution = timed(config.timings, r.shap_us, [&] { return shapley_tree(s.ensemble, x); });
    const auto order = deletion_order(config, s, &r.attribution);
    FilterStats stats;
    r.one = timed(config.timings, r.one_us,
                  [&] { return one_minimal(s.ensemble, x, s.domains, order, enum_opts.logic, &stats); });
    r.one_calls = stats.oracle_calls;
    EnumerationOptions opts = enum_opts;
    opts.order = order;
    r.all = timed(config.timings, r.all_us, [&] { return all_minimal(s.ensemble, x, s.domains, opts); });
  });

  // Sequential reduction in entry order.
  SizeGroups sizes;
  AttributionGroups attributions;
  EnumerationGroups enumerations;
  std::vector<std::int64_t> shap_us, one_us, all_us;
  json incomplete = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& r = results[i];
    sizes[e.class_label]["one-minimal"].push_back(r.one.size());
    sizes[e.class_label]["shap"].push_back(positive_features(r.attribution).size());
    attributions[e.class_label].push_back(r.attribution.phi);
    SampleExplanations se;
    se.complete = r.all.complete;
    for (const auto& expl : r.all.explanations) se.explanations.push_back(expl.features());
    enumerations[e.class_label].push_back(std::move(se));
    if (!r.all.complete) incomplete.push_back({{"entry", i}, {"sample_id", e.sample_id}});
    shap_us.push_back(r.shap_us);
    one_us.push_back(r.one_us);
    all_us.push_back(r.all_us);
  }
  const SparsityReport sparsity = sparsity_report(sizes);
  const auto stability = shap_stability(attributions, config.divergence.topk);
  const OccurrenceMatrix occurrence = vote_occurrence(enumerations, n);
  std::map<std::string, std::vector<double>> shap_means;
  for (const auto& st : stability) {
    auto& means = shap_means[st.class_label];
    for (const auto& f : st.features) means.push_back(f.mean);
  }
  const auto div = divergence(occurrence, shap_means, config.divergence);
  const auto runtime = runtime_report(
      {{"shap", seconds(shap_us)}, {"one-minimal", seconds(one_us)}, {"all-minimal", seconds(all_us)}});

  json warnings = json::array();
  for (const auto& w : sparsity.warnings) warnings.push_back(w);
  for (const auto& w : occurrence.warnings) warnings.push_back(w);
  for (const auto& c : s.alerts.empty_classes) warnings.push_back("selection: class '" + c + "' has no eligible sample");

  json fallback = json::array();
  for (const auto& c : s.alerts.classes) {
    if (c.repeated > 0) {
      fallback.push_back({{"class_label", c.class_label}, {"pool_size", c.pool_size}, {"repeated", c.repeated}});
    }
  }

  json manifest = {
      {"tool", "treexai"},
      {"version", TREEXAI_VERSION},
      {"seed", config.seed},
      {"model", config.model_path},
      {"data", config.data_path},
      {"label_col", config.label_col},
      {"class_col", config.class_col},
      {"select", std::string(to_string(config.select))},
      {"per_class", config.per_class},
      {"timeout_secs", config.timeout_secs},
      {"cap", config.cap},
      {"domains", config.domains_path ? json(*config.domains_path) : json(nullptr)},
      {"costs", config.costs_path ? json(*config.costs_path) : json(nullptr)},
      {"order", config.order == DeletionOrder::cost ? "cost" : "attribution"},
      {"split_budget", config.split_budget},
      {"thresholds",
       {{"occurrence_threshold", config.divergence.occurrence_threshold},
        {"near_zero_eps", config.divergence.near_zero_epsilon},
        {"topk", config.divergence.topk}}},
      {"occurrence_weighting", "per-sample-mean"},
      {"attribution_scale", "margin"},
      {"timings", config.timings},
      {"entries", entries.size()},
      {"fallback", {{"used", s.alerts.used_fallback()}, {"classes", std::move(fallback)}}},
      {"incomplete_enumerations", std::move(incomplete)},
      {"warnings", std::move(warnings)},
  };

  write_atomically(config.out, [&](const fs::path& dir) {
    records::write_json(dir / "alerts.json", records::alerts(s.alerts));
    fs::create_directories(dir / "explanations");
    fs::create_directories(dir / "attributions");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const auto& r = results[i];
      const std::string stem = records::entry_stem(i, entries.size()) + ".json";
      json expl = records::one_minimal(e, i, r.one, r.one_us, r.one_calls, s.ensemble);
      expl["all_minimal"] = records::enumeration(r.all, r.all_us, s.ensemble);
      records::write_json(dir / "explanations" / stem, expl);
      records::write_json(dir / "attributions" / stem,
                          records::attribution(e, i, r.attribution, s.predictions[e.sample_id].margin, r.shap_us,
                                               s.ensemble));
    }
    records::write_stability_csv(dir / "stability.csv", stability, occurrence, s.ensemble);
    records::write_shap_top_csv(dir / "shap_top.csv", stability, s.ensemble);
    records::write_divergence_csv(dir / "divergence.csv", div, s.ensemble);
    records::write_runtime_csv(dir / "runtime.csv", runtime);
    records::write_sparsity_csv(dir / "sparsity.csv", sparsity);
    records::write_json(dir / "manifest.json", manifest);
  });
}

}  // namespace treexai

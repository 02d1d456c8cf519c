// Acceptance suite: one PASS/FAIL line per primary criterion.
// Exit status is nonzero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "treexai/csv.hpp"
#include "treexai/logic.hpp"
#include "treexai/metrics.hpp"
#include "treexai/oracle.hpp"
#include "treexai/pipeline.hpp"
#include "treexai/shap.hpp"

using namespace treexai;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = j;
  return v;
}

std::uint32_t sorted_mask(const EnumerationResult& r, std::vector<std::uint32_t>& out) {
  out.clear();
  for (const auto& e : r.explanations) out.push_back(fixtures::features_mask(e.features()));
  std::sort(out.begin(), out.end());
  return static_cast<std::uint32_t>(out.size());
}

// ---- 1 ----------------------------------------------------------------------

Outcome logic_correctness() {
  Outcome o;
  const auto start = Clock::now();
  const TreeEnsemble fa = fixtures::fix_a();
  const std::vector<double> alert = {3, 9, 1};
  {
    const FeatureDomainSpec d(3);
    const auto valid = fixtures::brute_validity(fa, alert, d);
    const auto minimal = fixtures::brute_minimal(valid, 3);
    std::vector<std::uint32_t> got;
    sorted_mask(all_minimal(fa, alert, d), got);
    std::vector<std::uint32_t> want = minimal;
    std::sort(want.begin(), want.end());
    o.require(got == want, "FIX-A enumeration differs from brute force");
  }

  std::mt19937_64 rng(1001);
  std::size_t fixtures_run = 0;
  for (int i = 0; i < 250; ++i) {
    const TreeEnsemble e = fixtures::random_ensemble(rng, {});
    const auto x = fixtures::random_sample(rng, e.feature_count());
    const std::size_t n = e.feature_count();
    FeatureDomainSpec d(n);
    if (i % 4 == 0) d = FeatureDomainSpec(std::vector<Interval>(n, Interval{-1.0, 1.0}));
    const auto valid = fixtures::brute_validity(e, x, d);
    const auto minimal = fixtures::brute_minimal(valid, n);

    auto order = identity(n);
    std::shuffle(order.begin(), order.end(), rng);
    const Explanation one = one_minimal(e, x, d, order);
    const auto mask = fixtures::features_mask(one.features());
    o.require(valid[mask], "one_minimal output invalid on fixture " + std::to_string(i));
    o.require(std::find(minimal.begin(), minimal.end(), mask) != minimal.end(),
              "one_minimal output not minimal on fixture " + std::to_string(i));

    const EnumerationResult all = all_minimal(e, x, d);
    o.require(all.complete, "enumeration incomplete on fixture " + std::to_string(i));
    std::vector<std::uint32_t> got;
    sorted_mask(all, got);
    std::vector<std::uint32_t> want = minimal;
    std::sort(want.begin(), want.end());
    o.require(got == want, "enumeration differs from brute force on fixture " + std::to_string(i));
    ++fixtures_run;
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, fmt("suite took %.1f s", elapsed));
  if (o.pass) o.detail = "FIX-A + " + std::to_string(fixtures_run) + " fixtures in " + fmt("%.2f s", elapsed);
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome fix_a_golden() {
  Outcome o;
  const TreeEnsemble e = fixtures::fix_a();
  const std::vector<double> x = {3, 9, 1};
  const FeatureDomainSpec d(3);
  const auto all = all_minimal(e, x, d);
  std::vector<std::vector<std::size_t>> sets;
  for (const auto& ex : all.explanations) sets.push_back(ex.features());
  std::sort(sets.begin(), sets.end());
  o.require(all.complete && sets == std::vector<std::vector<std::size_t>>{{0, 2}, {1, 2}},
            "all_minimal is not {{f0,f2},{f1,f2}}");
  const std::vector<std::size_t> a = {0, 1, 2};
  const std::vector<std::size_t> b = {1, 0, 2};
  o.require(one_minimal(e, x, d, a).features() == std::vector<std::size_t>{1, 2}, "order (f0,f1,f2) did not give {f1,f2}");
  o.require(one_minimal(e, x, d, b).features() == std::vector<std::size_t>{0, 2}, "order (f1,f0,f2) did not give {f0,f2}");
  if (o.pass) o.detail = "all_minimal {{f0,f2},{f1,f2}}; orders give {f1,f2} and {f0,f2}";
  return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome oracle_exactness() {
  Outcome o;
  std::mt19937_64 rng(1003);
  std::size_t queries = 0;
  std::size_t agree = 0;
  std::size_t witnesses = 0;
  std::size_t flips = 0;
  while (queries < 10'000) {
    const TreeEnsemble e = fixtures::random_ensemble(rng, {});
    const auto x = fixtures::random_sample(rng, e.feature_count());
    const std::size_t n = e.feature_count();
    FeatureDomainSpec d(n);
    if (rng() % 3 == 0) d = FeatureDomainSpec(std::vector<Interval>(n, Interval{-1.0, 1.0}));
    const Klass target = e.predict(x).klass;
    const auto valid = fixtures::brute_validity(e, x, d);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<bool> fixed(n);
      for (std::size_t j = 0; j < n; ++j) fixed[j] = (mask >> j) & 1u;
      const Box box = make_box(x, fixed, d);
      const auto verdict = decide_invariance(e, box, target);
      const auto exact = fixtures::brute_range(e, box, target);
      ++queries;
      if (verdict.kind != OracleVerdict::Kind::unknown && verdict.invariant() == exact.target_everywhere &&
          verdict.invariant() == valid[mask]) {
        ++agree;
      }
      if (verdict.kind == OracleVerdict::Kind::counterexample) {
        ++witnesses;
        if (box_contains(box, verdict.witness) && e.predict(verdict.witness).klass == opposite(target)) ++flips;
      }
    }
  }
  o.require(agree == queries, std::to_string(queries - agree) + " of " + std::to_string(queries) + " queries disagree");
  o.require(flips == witnesses, std::to_string(witnesses - flips) + " witnesses do not flip the class");
  if (o.pass) {
    o.detail = std::to_string(queries) + " queries agree; " + std::to_string(witnesses) + " witnesses all flip";
  }
  return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome shapley_correctness() {
  Outcome o;
  std::mt19937_64 rng(1004);
  fixtures::RandomShape shape;
  shape.max_features = 12;
  shape.max_trees = 5;
  shape.max_depth = 4;
  shape.grid_values = false;
  shape.integer_covers = false;
  double worst = 0.0;
  for (int i = 0; i < 220; ++i) {
    const TreeEnsemble e = fixtures::random_ensemble(rng, shape);
    std::vector<double> x(e.feature_count());
    for (auto& v : x) v = std::uniform_real_distribution<double>(-1.5, 1.5)(rng);
    const auto fast = shapley_tree(e, x);
    const auto slow = shapley_bruteforce(e, x);
    const double m = e.margin(x);
    worst = std::max({worst, std::abs(fast.total() - m), std::abs(slow.total() - m), std::abs(fast.base - slow.base)});
    for (std::size_t j = 0; j < x.size(); ++j) {
      worst = std::max(worst, std::abs(fast.phi[j] - slow.phi[j]));
      if (!e.uses_feature(j)) {
        o.require(fast.phi[j] == 0.0 && slow.phi[j] == 0.0, "dummy feature with nonzero attribution");
      }
    }
  }
  o.require(worst <= 1e-9, fmt("max deviation %.3g", worst));

  const TreeEnsemble fa = fixtures::fix_a();
  const std::vector<double> alert = {3, 9, 1};
  for (const auto& a : {shapley_tree(fa, alert), shapley_bruteforce(fa, alert)}) {
    const bool golden = std::abs(a.phi[0] - 0.4375) <= 1e-9 && std::abs(a.phi[1] - 0.1875) <= 1e-9 &&
                        std::abs(a.phi[2] - 0.8) <= 1e-9 && std::abs(a.base - 0.575) <= 1e-9;
    o.require(golden, "FIX-A golden vector mismatch");
  }
  if (o.pass) o.detail = "220 fixtures, max deviation " + fmt("%.2g", worst) + "; FIX-A golden matches";
  return o;
}

// ---- 5 and 6 ------------------------------------------------------------------

struct WorkloadRun {
  double train_s = 0.0;
  std::vector<double> one_s;
  std::vector<double> shap_s;
  SizeGroups sizes;
};

WorkloadRun run_workload(const fixtures::Workload& w) {
  WorkloadRun r;
  const std::size_t n = w.model.feature_count();
  const FeatureDomainSpec d(n);
  const auto order = CostVector(n).deletion_order();
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const auto& x = w.samples[i];
    auto t0 = Clock::now();
    const Explanation one = one_minimal(w.model, x, d, order);
    r.one_s.push_back(seconds_since(t0));
    t0 = Clock::now();
    const AttributionVector a = shapley_tree(w.model, x);
    r.shap_s.push_back(seconds_since(t0));
    const bool tp = w.labels[i] == Klass::malicious && w.model.predict(x).klass == Klass::malicious;
    if (tp) {
      r.sizes[w.classes[i]]["one-minimal"].push_back(one.size());
      r.sizes[w.classes[i]]["shap"].push_back(positive_features(a).size());
    }
  }
  return r;
}

Outcome efficiency(const WorkloadRun& r) {
  Outcome o;
  const RuntimeRow one = runtime_stats("one-minimal", r.one_s);
  const RuntimeRow shap = runtime_stats("shap", r.shap_s);
  o.detail = fmt("one-minimal mean %.3f ms, exact Shapley mean %.3f ms over %.0f samples", one.mean * 1e3,
                 shap.mean * 1e3, static_cast<double>(one.count));
  if (one.mean >= 0.010) {
    o.pass = false;
    o.detail += "; one-minimal mean is not below 10 ms";
  }
  if (one.mean >= shap.mean) {
    o.pass = false;
    o.detail += "; one-minimal is not faster than exact Shapley";
  }
  return o;
}

Outcome sparsity(const WorkloadRun& r) {
  Outcome o;
  const SparsityReport report = sparsity_report(r.sizes);
  std::size_t groups = 0;
  std::size_t ordered = 0;
  std::ostringstream medians;
  for (const auto& [klass, methods] : r.sizes) {
    const auto find = [&](const std::string& m) {
      for (const auto& row : report.rows) {
        if (row.class_label == klass && row.method == m) return row.median;
      }
      return std::nan("");
    };
    const double logic = find("one-minimal");
    const double shap = find("shap");
    if (std::isnan(logic) || std::isnan(shap)) continue;
    ++groups;
    if (logic <= shap) ++ordered;
    medians << ' ' << klass << '=' << logic << '/' << shap;
  }
  o.require(groups > 0, "no TP class groups");
  o.require(ordered * 10 >= groups * 9,
            std::to_string(ordered) + " of " + std::to_string(groups) + " groups ordered;" + medians.str());
  if (o.pass) {
    o.detail = std::to_string(ordered) + " of " + std::to_string(groups) +
               " groups have median logic size <= median positive-SHAP size (logic/shap:" + medians.str() + ")";
  }
  return o;
}

// ---- 7 ------------------------------------------------------------------------

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), dir).generic_string()] = s.str();
  }
  return out;
}

Outcome determinism(const fixtures::Workload& w) {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("treexai-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "model.json") << serialize_model(w.model);
    std::ofstream data(dir / "data.csv");
    CsvWriter csv(data);
    std::vector<std::string> header(w.model.feature_names().begin(), w.model.feature_names().end());
    header.push_back("label");
    header.push_back("attack");
    csv.row(header);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      std::vector<std::string> row;
      for (const double v : w.samples[i]) row.push_back(format_number(v));
      row.push_back(w.labels[i] == Klass::malicious ? "1" : "0");
      row.push_back(w.classes[i]);
      csv.row(row);
    }
  }
  RunConfig cfg;
  cfg.model_path = (dir / "model.json").string();
  cfg.data_path = (dir / "data.csv").string();
  cfg.per_class = 2;
  cfg.seed = 17;
  cfg.cap = 8;
  cfg.timings = false;
  const std::size_t many = std::max(2u, std::thread::hardware_concurrency());

  std::vector<std::map<std::string, std::string>> bundles;
  for (const std::size_t threads : {std::size_t{1}, std::size_t{1}, many}) {
    cfg.threads = threads;
    cfg.out = dir / ("bundle-" + std::to_string(bundles.size()));
    cmd_evaluate(cfg);
    bundles.push_back(tree_contents(cfg.out));
  }
  o.require(!bundles[0].empty(), "empty bundle");
  o.require(bundles[0] == bundles[1], "two single-threaded runs differ");
  o.require(bundles[0] == bundles[2], "1 and " + std::to_string(many) + " threads differ");
  if (o.pass) {
    o.detail = std::to_string(bundles[0].size()) + " files identical across 2 runs and threads {1, " +
               std::to_string(many) + "}";
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return o;
}

// ---- 8 ------------------------------------------------------------------------

Outcome metric_checks() {
  Outcome o;
  EnumerationGroups g;
  g["dos"] = {SampleExplanations{{{0, 2}, {1, 2}}, true}};
  const OccurrenceMatrix occ = vote_occurrence(g, 3);
  const auto& row = *occ.row("dos");
  o.require(row[0] == 50.0 && row[1] == 50.0 && row[2] == 100.0, "FIX-A occurrence is not (50, 50, 100)");

  std::mt19937_64 rng(1008);
  EnumerationGroups random;
  for (int s = 0; s < 50; ++s) {
    SampleExplanations se;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 5); ++k) {
      std::vector<std::size_t> ex;
      for (std::size_t j = 0; j < 10; ++j) {
        if (rng() % 3 == 0) ex.push_back(j);
      }
      se.explanations.push_back(ex);
    }
    random["c" + std::to_string(s % 4)].push_back(se);
  }
  for (const auto& r : vote_occurrence(random, 10).percent) {
    for (const double v : r) o.require(v >= 0.0 && v <= 100.0, "occurrence outside [0, 100]");
  }

  OccurrenceMatrix m;
  m.feature_count = 6;
  m.classes = {"a", "b"};
  m.percent = {{95, 90, 85, 10, 99, 0}, {100, 0, 0, 0, 0, 81}};
  const std::map<std::string, std::vector<double>> shap = {{"a", {0.0, 0.5, 0.004, 2.0, -0.3, 0.0}},
                                                           {"b", {0.009, 1, 1, 1, 1, 0.02}}};
  std::vector<std::pair<std::string, std::size_t>> flagged;
  for (const auto& d : divergence(m, shap)) {
    for (const auto& r : d.rows) {
      if (r.flagged) flagged.emplace_back(d.class_label, r.feature);
    }
  }
  std::sort(flagged.begin(), flagged.end());
  const std::vector<std::pair<std::string, std::size_t>> want = {{"a", 0}, {"a", 2}, {"a", 4}, {"b", 0}};
  o.require(flagged == want, "divergence flags differ from the constructed set");

  const RuntimeRow rt = runtime_stats("x", {1, 2, 3, 4, 100});
  o.require(rt.min <= rt.p25 && rt.p25 <= rt.median && rt.median <= rt.p75 && rt.p75 <= rt.max,
            "runtime statistics out of order");
  o.require(rt.median == 3.0 && rt.outliers == std::vector<double>{100.0}, "runtime median or outliers wrong");
  if (o.pass) o.detail = "occurrence (50, 50, 100); 4 constructed divergences flagged; runtime median 3, outlier 100";
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  report("logic-correctness", logic_correctness);
  report("fix-a-golden-trace", fix_a_golden);
  report("oracle-exactness", oracle_exactness);
  report("shapley-correctness", shapley_correctness);

  const auto t0 = Clock::now();
  const fixtures::Workload w = fixtures::synthetic_workload();
  const double train_s = seconds_since(t0);
  std::size_t leaves = 0;
  for (const auto& t : w.model.trees()) {
    for (const auto& node : t.nodes()) leaves += node.is_leaf();
  }
  std::printf("      synthetic workload: %zu trees, %zu leaves, %zu features, %zu samples, trained in %.2f s\n",
              w.model.trees().size(), leaves, w.model.feature_count(), w.samples.size(), train_s);
  const WorkloadRun run = run_workload(w);
  report("efficiency-ordering", [&] { return efficiency(run); });
  report("sparsity-ordering", [&] { return sparsity(run); });
  report("pipeline-determinism", [&] { return determinism(w); });
  report("metric-unit-checks", metric_checks);
  return failures == 0 ? 0 : 1;
}

// treexai: predict, explain and evaluate tree-ensemble alerts.
//
// Exit codes: 0 success, 2 input or schema error, 3 empty selection,
// 4 internal invariant violation.

#include <exception>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "treexai/errors.hpp"
#include "treexai/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kInput = 2, kEmptySelection = 3, kInternal = 4 };

void add_common(CLI::App& cmd, treexai::RunConfig& cfg) {
  cmd.add_option("--model", cfg.model_path, "Canonical model JSON")->required();
  cmd.add_option("--data", cfg.data_path, "CSV with one column per model feature")->required();
}

void add_selection(CLI::App& cmd, treexai::RunConfig& cfg, std::string& select,
                   std::string& order, bool& no_timings) {
  cmd.add_option("--label-col", cfg.label_col, "Binary label column")->capture_default_str();
  cmd.add_option("--class-col", cfg.class_col, "Attack class column")->capture_default_str();
  cmd.add_option("--per-class", cfg.per_class, "Alerts drawn per class")->capture_default_str();
  cmd.add_option("--seed", cfg.seed, "Selection seed")->capture_default_str();
  cmd.add_option("--timeout-secs", cfg.timeout_secs, "Per-sample enumeration timeout")->capture_default_str();
  cmd.add_option("--cap", cfg.cap, "Maximum explanations per sample")->capture_default_str();
  cmd.add_option("--domains", cfg.domains_path, "Domain file narrowing freed features");
  cmd.add_option("--costs", cfg.costs_path, "JSON object of per-feature deletion costs");
  cmd.add_option("--order", order, "Deletion order")
      ->check(CLI::IsMember({"cost", "attribution"}))
      ->capture_default_str();
  cmd.add_option("--split-budget", cfg.split_budget, "Oracle split budget (0 = unlimited)")->capture_default_str();
  cmd.add_option("--select", select, "Alert kind")->check(CLI::IsMember({"tp", "fp"}))->capture_default_str();
  cmd.add_option("--out", cfg.out, "Output directory")->required();
  cmd.add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  cmd.add_flag("--no-timings", no_timings, "Write zero durations so bundles are byte-reproducible");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logic-based and Shapley explanations of tree-ensemble alerts", "treexai"};
  app.set_version_flag("--version", std::string(TREEXAI_VERSION));
  app.require_subcommand(1);

  treexai::RunConfig cfg;
  std::string mode = "one-minimal";
  std::string select = "tp";
  std::string order = "cost";
  bool no_timings = false;

  auto* predict = app.add_subcommand("predict", "Margins and classes as JSON lines on stdout");
  add_common(*predict, cfg);

  auto* explain = app.add_subcommand("explain", "Select alerts and run one explainer");
  add_common(*explain, cfg);
  explain->add_option("--mode", mode, "Explainer")
      ->check(CLI::IsMember({"shap", "one-minimal", "all-minimal"}))
      ->capture_default_str();
  add_selection(*explain, cfg, select, order, no_timings);

  auto* evaluate = app.add_subcommand("evaluate", "Run both explainers and write the report bundle");
  add_common(*evaluate, cfg);
  add_selection(*evaluate, cfg, select, order, no_timings);
  evaluate->add_option("--occurrence-threshold", cfg.divergence.occurrence_threshold, "Percent")
      ->capture_default_str();
  evaluate->add_option("--near-zero-eps", cfg.divergence.near_zero_epsilon, "Margin scale")->capture_default_str();
  evaluate->add_option("--topk", cfg.divergence.topk, "SHAP features ranked per class")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    cfg.mode = treexai::parse_mode(mode);
    cfg.select = select == "fp" ? treexai::SelectionKind::fp : treexai::SelectionKind::tp;
    cfg.order = order == "attribution" ? treexai::DeletionOrder::attribution : treexai::DeletionOrder::cost;
    cfg.timings = !no_timings;
    if (predict->parsed()) {
      treexai::cmd_predict(cfg, std::cout);
    } else if (explain->parsed()) {
      treexai::cmd_explain(cfg);
    } else {
      treexai::cmd_evaluate(cfg);
    }
    std::cout.flush();
    return kOk;
  } catch (const treexai::EmptySelectionError& e) {
    std::cerr << "treexai: empty selection: " << e.what() << '\n';
    return kEmptySelection;
  } catch (const treexai::ParseError& e) {
    std::cerr << "treexai: parse error at byte " << e.byte_offset() << ": " << e.what() << '\n';
    return kInput;
  } catch (const treexai::StructuralError& e) {
    std::cerr << "treexai: invalid model: " << e.what() << '\n';
    return kInput;
  } catch (const treexai::SchemaError& e) {
    std::cerr << "treexai: schema error: " << e.what() << '\n';
    return kInput;
  } catch (const treexai::ContractError& e) {
    std::cerr << "treexai: internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const std::invalid_argument& e) {
    std::cerr << "treexai: " << e.what() << '\n';
    return kInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "treexai: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "treexai: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

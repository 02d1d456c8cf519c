#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "treexai/errors.hpp"
#include "treexai/logic.hpp"
#include "treexai/oracle.hpp"
#include "treexai/pipeline.hpp"
#include "treexai/shap.hpp"

namespace py = pybind11;
using namespace treexai;

namespace {

FeatureDomainSpec domains_of(const TreeEnsemble& e, const std::optional<std::vector<std::pair<double, double>>>& d) {
  if (!d) return FeatureDomainSpec(e.feature_count());
  std::vector<Interval> v;
  for (const auto& [lo, hi] : *d) v.push_back({lo, hi});
  return FeatureDomainSpec(std::move(v));
}

std::vector<std::size_t> order_of(const TreeEnsemble& e, const std::optional<std::vector<std::size_t>>& order) {
  return order ? *order : CostVector(e.feature_count()).deletion_order();
}

py::dict explanation_dict(const Explanation& ex) {
  py::dict d;
  d["features"] = ex.features();
  std::vector<double> values;
  for (const auto& p : ex.pairs) values.push_back(p.value);
  d["values"] = values;
  d["target"] = std::string(to_string(ex.target));
  d["minimal"] = ex.minimality == Minimality::proved;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tree-ensemble explanation engine";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);
  py::register_exception<EmptySelectionError>(m, "EmptySelectionError", PyExc_RuntimeError);

  py::class_<TreeEnsemble>(m, "Ensemble")
      .def_property_readonly("feature_count", &TreeEnsemble::feature_count)
      .def_property_readonly("base_margin", &TreeEnsemble::base_margin)
      .def_property_readonly("tree_count", [](const TreeEnsemble& e) { return e.trees().size(); })
      .def_property_readonly("feature_names",
                             [](const TreeEnsemble& e) {
                               return std::vector<std::string>(e.feature_names().begin(), e.feature_names().end());
                             })
      .def("margin", [](const TreeEnsemble& e, const std::vector<double>& x) { return e.margin(x); })
      .def("predict",
           [](const TreeEnsemble& e, const std::vector<double>& x) {
             const Prediction p = e.predict(x);
             return py::dict(py::arg("margin") = p.margin, py::arg("probability") = p.probability,
                             py::arg("klass") = std::string(to_string(p.klass)));
           })
      .def("to_json", [](const TreeEnsemble& e) { return serialize_model(e); });

  m.def("parse_model", &parse_model, py::arg("document"));
  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "shapley_tree",
      [](const TreeEnsemble& e, const std::vector<double>& x) {
        const AttributionVector a = shapley_tree(e, x);
        return py::make_tuple(a.phi, a.base);
      },
      py::arg("ensemble"), py::arg("x"), "Exact Shapley values on the margin scale as (phi, base).");

  m.def(
      "is_valid",
      [](const TreeEnsemble& e, const std::vector<double>& x, const std::vector<std::size_t>& subset,
         const std::optional<std::vector<std::pair<double, double>>>& domains) {
        return is_valid(e, x, subset, domains_of(e, domains));
      },
      py::arg("ensemble"), py::arg("x"), py::arg("subset"), py::arg("domains") = py::none());

  m.def(
      "decide_invariance",
      [](const TreeEnsemble& e, const std::vector<std::pair<double, double>>& box, const std::string& target,
         std::size_t split_budget) {
        Box b;
        for (const auto& [lo, hi] : box) b.push_back({lo, hi});
        OracleOptions opts;
        opts.split_budget = split_budget;
        const Klass k = target == "malicious" ? Klass::malicious : Klass::benign;
        const OracleVerdict v = decide_invariance(e, b, k, opts);
        const char* kind = v.kind == OracleVerdict::Kind::invariant        ? "invariant"
                           : v.kind == OracleVerdict::Kind::counterexample ? "counterexample"
                                                                           : "unknown";
        py::dict d;
        d["kind"] = kind;
        d["witness"] = v.witness;
        d["margin"] = v.margin;
        d["splits"] = v.splits;
        return d;
      },
      py::arg("ensemble"), py::arg("box"), py::arg("target"), py::arg("split_budget") = 0);

  m.def(
      "one_minimal",
      [](const TreeEnsemble& e, const std::vector<double>& x, const std::optional<std::vector<std::size_t>>& order,
         const std::optional<std::vector<std::pair<double, double>>>& domains) {
        const auto d = domains_of(e, domains);
        const auto o = order_of(e, order);
        Explanation ex;
        {
          py::gil_scoped_release release;
          ex = one_minimal(e, x, d, o);
        }
        return explanation_dict(ex);
      },
      py::arg("ensemble"), py::arg("x"), py::arg("order") = py::none(), py::arg("domains") = py::none());

  m.def(
      "all_minimal",
      [](const TreeEnsemble& e, const std::vector<double>& x, std::size_t cap, double timeout_secs,
         const std::optional<std::vector<std::pair<double, double>>>& domains) {
        const auto d = domains_of(e, domains);
        EnumerationOptions opts;
        opts.cap = cap;
        opts.timeout = std::chrono::nanoseconds(static_cast<std::int64_t>(std::min(timeout_secs, 1e9) * 1e9));
        EnumerationResult r;
        {
          py::gil_scoped_release release;
          r = all_minimal(e, x, d, opts);
        }
        py::list list;
        for (const auto& ex : r.explanations) list.append(explanation_dict(ex));
        py::dict out;
        out["explanations"] = list;
        out["complete"] = r.complete;
        out["oracle_calls"] = r.oracle_calls;
        return out;
      },
      py::arg("ensemble"), py::arg("x"), py::arg("cap") = 10'000, py::arg("timeout_secs") = 3600.0,
      py::arg("domains") = py::none());

  m.def(
      "evaluate",
      [](const std::string& model, const std::string& data, const std::filesystem::path& out, std::size_t per_class,
         std::uint64_t seed, std::size_t cap, double timeout_secs, std::size_t threads, bool timings,
         const std::string& label_col, const std::string& class_col) {
        RunConfig cfg;
        cfg.model_path = model;
        cfg.data_path = data;
        cfg.out = out;
        cfg.per_class = per_class;
        cfg.seed = seed;
        cfg.cap = cap;
        cfg.timeout_secs = timeout_secs;
        cfg.threads = threads;
        cfg.timings = timings;
        cfg.label_col = label_col;
        cfg.class_col = class_col;
        py::gil_scoped_release release;
        cmd_evaluate(cfg);
      },
      py::arg("model"), py::arg("data"), py::arg("out"), py::arg("per_class") = 11, py::arg("seed") = 0,
      py::arg("cap") = 10'000, py::arg("timeout_secs") = 3600.0, py::arg("threads") = 0, py::arg("timings") = true,
      py::arg("label_col") = "label", py::arg("class_col") = "attack",
      "Runs both explainers and writes the report bundle to `out`.");
}

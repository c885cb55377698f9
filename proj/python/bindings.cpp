#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "json.hpp"
#include "silico/axis.hpp"
#include "silico/battery.hpp"
#include "silico/cluster.hpp"
#include "silico/demo.hpp"
#include "silico/justify.hpp"
#include "silico/stats.hpp"
#include "silico/toy_model.hpp"

namespace py = pybind11;

using namespace silico;

namespace {

battery::PrimingProfile profile_from_side(const std::string& side) {
  return battery::PrimingProfile::defaults(battery::side_from_name(side));
}

py::dict regression_to_dict(const stats::RegressionResult& r) {
  py::dict d;
  d["beta"] = r.beta;
  d["se"] = r.se;
  d["t_stat"] = r.t_stat;
  d["p_value"] = r.p_value;
  d["n_lib"] = r.n_lib;
  d["n_con"] = r.n_con;
  d["degenerate"] = r.degenerate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_silico, m) {
  m.doc() = "simulated-respondent survey engine (C++ core)";
#ifdef SILICO_VERSION
  m.attr("__version__") = SILICO_VERSION;
#else
  m.attr("__version__") = "dev";
#endif

  // prompt battery -----------------------------------------------------------
  m.def(
      "compose_priming",
      [](const std::string& side) {
        return battery::compose_priming(profile_from_side(side));
      },
      py::arg("side"), "Partisan priming block for 'liberal' or 'conservative'.");

  m.def(
      "compose_prompt",
      [](const std::string& side, const std::string& issue_text,
         const std::string& stem, const std::string& mode) {
        battery::StemVariant sv{"py", stem};
        return battery::compose_prompt(profile_from_side(side), issue_text, sv,
                                       battery::mode_from_name(mode));
      },
      py::arg("side"), py::arg("issue_text"), py::arg("stem"),
      py::arg("mode") = "covid");

  m.def(
      "expand_battery",
      [](const std::string& battery_json) {
        auto config = battery::parse_battery(nlohmann::json::parse(battery_json));
        auto instances = battery::expand_battery(config);
        py::list out;
        for (const auto& inst : instances) {
          py::dict d;
          d["prompt_id"] = inst.prompt_id;
          d["side"] = battery::side_name(inst.side);
          d["issue_id"] = inst.issue_id;
          d["wording_index"] = inst.wording_index;
          d["stem_id"] = inst.stem_id;
          d["full_text"] = inst.full_text;
          out.append(std::move(d));
        }
        return out;
      },
      py::arg("battery_json"),
      "Expand a battery config (JSON string) into prompt instances.");

  // toy autoregressive model -------------------------------------------------
  py::class_<gateway::ToyConditionalModel>(m, "ToyConditionalModel")
      .def(py::init<>())
      .def("add_context", &gateway::ToyConditionalModel::add_context,
           py::arg("context"), py::arg("distribution"))
      .def_property_readonly("vocabulary",
                             &gateway::ToyConditionalModel::vocabulary);

  m.def("sequence_probability", &gateway::sequence_probability,
        py::arg("model"), py::arg("tokens"),
        "Joint probability of a token sequence under the toy model.");

  // axis scorer ---------------------------------------------------------------
  py::class_<axis::AxisSpec>(m, "AxisSpec")
      .def(py::init([](const std::string& axis_id,
                       std::vector<std::string> positive,
                       std::vector<std::string> negative) {
             axis::AxisSpec s;
             s.axis_id = axis_id;
             s.positive_anchors = std::move(positive);
             s.negative_anchors = std::move(negative);
             s.validate();
             return s;
           }),
           py::arg("axis_id"), py::arg("positive_anchors"),
           py::arg("negative_anchors"))
      .def_readonly("axis_id", &axis::AxisSpec::axis_id)
      .def_readonly("positive_anchors", &axis::AxisSpec::positive_anchors)
      .def_readonly("negative_anchors", &axis::AxisSpec::negative_anchors);

  m.def("cosine", &axis::cosine, py::arg("u"), py::arg("v"));

  m.def(
      "axis_score",
      [](const std::vector<double>& completion_vec, const axis::AxisSpec& spec,
         const std::vector<std::vector<double>>& positive_vecs,
         const std::vector<std::vector<double>>& negative_vecs) {
        auto s = axis::score_against_axis(completion_vec, spec, positive_vecs,
                                          negative_vecs);
        py::dict d;
        d["score"] = s.score;
        d["sim_pos"] = s.sim_pos;
        d["sim_neg"] = s.sim_neg;
        return d;
      },
      py::arg("completion_vec"), py::arg("axis"), py::arg("positive_vecs"),
      py::arg("negative_vecs"));

  m.def(
      "classify_sign",
      [](double score) { return axis::sign_name(axis::classify_sign(score)); },
      py::arg("score"));

  // stats ----------------------------------------------------------------------
  py::class_<stats::RegressionResult>(m, "OlsResult")
      .def_readonly("beta", &stats::RegressionResult::beta)
      .def_readonly("se", &stats::RegressionResult::se)
      .def_readonly("t_stat", &stats::RegressionResult::t_stat)
      .def_readonly("p_value", &stats::RegressionResult::p_value)
      .def_readonly("degenerate", &stats::RegressionResult::degenerate)
      .def("to_dict", &regression_to_dict);

  m.def("ols_binary", &stats::ols_binary, py::arg("scores_lib"),
        py::arg("scores_con"),
        "Effect of liberal priming on the score: beta, se, t, two-sided p.");

  m.def("binomial_test", &stats::binomial_test, py::arg("k"), py::arg("n"),
        py::arg("p0"), "Exact one-sided upper tail P(X >= k).");

  m.def(
      "two_proportion_test",
      [](long k1, long n1, long k2, long n2) {
        auto r = stats::two_proportion_test(k1, n1, k2, n2);
        return py::make_tuple(r.p_value, r.method);
      },
      py::arg("k1"), py::arg("n1"), py::arg("k2"), py::arg("n2"),
      "One-sided test that k1/n1 > k2/n2; returns (p, method).");

  // clustering -----------------------------------------------------------------
  py::class_<cluster::ClusterModel>(m, "ClusterModel")
      .def_readonly("k", &cluster::ClusterModel::k)
      .def_readonly("centroids", &cluster::ClusterModel::centroids)
      .def_readonly("assignments", &cluster::ClusterModel::assignments)
      .def_readonly("inertia", &cluster::ClusterModel::inertia)
      .def_readonly("iterations_run", &cluster::ClusterModel::iterations_run);

  m.def("kmeans", &cluster::kmeans, py::arg("points"), py::arg("k"),
        py::arg("seed"), py::arg("max_iter") = 300, py::arg("tol") = 1e-6);
  m.def("silhouette", &cluster::silhouette, py::arg("points"),
        py::arg("assignments"));
  m.def("calinski_harabasz", &cluster::calinski_harabasz, py::arg("points"),
        py::arg("assignments"));
  m.def("davies_bouldin", &cluster::davies_bouldin, py::arg("points"),
        py::arg("assignments"));
  m.def(
      "select_k",
      [](const std::vector<cluster::Point>& points, int k_min, int k_max,
         uint64_t seed, std::optional<int> override_k) {
        auto r = cluster::select_k(points, k_min, k_max, seed, override_k);
        py::list rows;
        for (const auto& q : r.qualities) {
          py::dict d;
          d["k"] = q.k;
          d["silhouette"] = q.silhouette;
          d["calinski_harabasz"] = q.calinski_harabasz;
          d["davies_bouldin"] = q.davies_bouldin;
          rows.append(std::move(d));
        }
        return py::make_tuple(r.k, r.manual, rows);
      },
      py::arg("points"), py::arg("k_min"), py::arg("k_max"), py::arg("seed"),
      py::arg("override_k") = py::none());

  // justifications ---------------------------------------------------------------
  m.def("truncate_to_sentence", &justify::truncate_to_sentence, py::arg("text"));
  m.def("build_justification_prompt", &justify::build_justification_prompt,
        py::arg("original_prompt"), py::arg("completion"));

  // end to end -------------------------------------------------------------------
  m.def(
      "run_demo",
      [](const std::string& runs_dir, const std::string& run_id, uint64_t seed) {
        std::string dir = run::run_demo(runs_dir, run_id, seed);
        std::ifstream in(dir + "/summary.json");
        nlohmann::json j;
        in >> j;
        return py::module_::import("json").attr("loads")(j.dump());
      },
      py::arg("runs_dir"), py::arg("run_id") = "demo", py::arg("seed") = 42,
      "Run the offline demo pipeline; returns the parsed summary.json.");
}

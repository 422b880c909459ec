#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "protostream/error.hpp"
#include "protostream/pipeline.hpp"

namespace py = pybind11;
using namespace protostream;

namespace {

SpaceConfig space_from(double epsilon, double temperature, double alpha, double beta, double spread_c) {
  SpaceConfig cfg;
  cfg.epsilon = epsilon;
  cfg.temperature = temperature;
  cfg.dirichlet_alpha = alpha;
  cfg.maturity_beta = beta;
  cfg.spread_c = spread_c;
  return cfg;
}

py::dict benchmark_dict(const Benchmark& b) {
  py::dict out;
  out["support_features"] = b.support_features;
  out["support_labels"] = b.support_labels;
  out["stream_features"] = b.stream_features;
  out["stream_labels"] = b.stream_labels;
  std::vector<Vec> means;
  for (const auto& m : b.class_means) means.push_back(m.vec());
  out["class_means"] = means;
  return out;
}

}  // namespace

PYBIND11_MODULE(_protostream, m) {
  m.doc() = "Support-calibrated online category discovery over precomputed features";

  py::register_exception<Error>(m, "ProtostreamError", PyExc_RuntimeError);

  m.def("log_uniform_density", &log_uniform_density, py::arg("d"),
        "Log density of the uniform distribution on the unit sphere in R^d.");
  m.def("vmf_concentration", &vmf_concentration, py::arg("resultant_norm"), py::arg("count"), py::arg("d"));

  m.def(
      "optimize_balanced_threshold",
      [](const std::vector<double>& pos, const std::vector<double>& neg) {
        const auto fit = optimize_balanced_threshold(pos, neg);
        return py::make_tuple(fit.tau, fit.balanced_accuracy);
      },
      py::arg("positives"), py::arg("negatives"));

  m.def(
      "hungarian_assign",
      [](const ProfitMatrix& profit) {
        const auto a = hungarian_assign(profit);
        return py::make_tuple(a.row_to_col, a.total);
      },
      py::arg("profit"), "Maximum-profit one-to-one matching; returns (row_to_col, total).");

  m.def(
      "generate_benchmark",
      [](const std::string& spec_json) {
        return benchmark_dict(generate_benchmark(benchmark_spec_from_json(Json::parse(spec_json))));
      },
      py::arg("spec_json"));

  m.def(
      "calibrate",
      [](const std::vector<Vec>& features, const std::vector<int>& labels, int passes, std::uint64_t seed,
         double epsilon, double temperature, double alpha, double beta, double spread_c) {
        const auto art =
            calibrate(features, labels, space_from(epsilon, temperature, alpha, beta, spread_c), passes, seed);
        return to_json(art).dump();
      },
      py::arg("features"), py::arg("labels"), py::arg("passes") = 3, py::arg("seed") = 0,
      py::arg("epsilon") = 1e-5, py::arg("temperature") = 1.0, py::arg("alpha") = 1e6, py::arg("beta") = 0.5,
      py::arg("spread_c") = 1.0, "Returns the calibration artifact as a JSON string.");

  m.def(
      "run_stream",
      [](const std::string& artifact_json, const std::vector<Vec>& features) {
        const auto run = run_stream(artifact_from_json(Json::parse(artifact_json)), features);
        return py::make_tuple(trace_jsonl(run.traces), snapshot_json(run.final_state, run.traces).dump());
      },
      py::arg("artifact_json"), py::arg("features"), "Returns (trace JSON lines, snapshot JSON).");

  m.def(
      "evaluate",
      [](const std::vector<std::int64_t>& predictions, const std::vector<std::int64_t>& truths,
         const std::vector<std::int64_t>& base_labels, std::int64_t num_total_labels) {
        TruthSidecar truth{truths, base_labels, num_total_labels};
        return to_json(evaluate(make_stream_result(predictions, truth))).dump();
      },
      py::arg("predictions"), py::arg("truths"), py::arg("base_labels"), py::arg("num_total_labels") = 0);
}

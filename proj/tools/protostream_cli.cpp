// Command-line front end: offline calibration, online streaming, evaluation,
// synthetic benchmark generation, region export and latency profiling.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "protostream/error.hpp"
#include "protostream/pipeline.hpp"

namespace fs = std::filesystem;
using namespace protostream;

namespace {

struct SpaceFlags {
  std::optional<double> epsilon, temperature, alpha, beta, spread_c;

  void add(CLI::App* cmd) {
    cmd->add_option("--epsilon", epsilon, "Whitening stabilizer");
    cmd->add_option("--temperature", temperature, "Score temperature T");
    cmd->add_option("--alpha", alpha, "Dirichlet smoothing constant");
    cmd->add_option("--beta", beta, "Maturity exponent");
    cmd->add_option("--spread-c", spread_c, "Support-spread shrinkage coefficient");
  }
  void apply(SpaceConfig& cfg) const {
    if (epsilon) cfg.epsilon = *epsilon;
    if (temperature) cfg.temperature = *temperature;
    if (alpha) cfg.dirichlet_alpha = *alpha;
    if (beta) cfg.maturity_beta = *beta;
    if (spread_c) cfg.spread_c = *spread_c;
  }
};

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
  }
}

std::vector<int> dense_labels(const FeatureSet& set, const std::string& path) {
  if (!set.labels) throw Error(ErrorKind::UnlabeledSupport, path + " carries no labels");
  std::vector<int> labels(set.labels->begin(), set.labels->end());
  for (int l : labels) {
    if (l < 0) throw Error(ErrorKind::UnlabeledSupport, path + " has unlabeled records");
  }
  return labels;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support-calibrated online category discovery over precomputed features"};
  app.require_subcommand(1);

  RunConfig run;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> passes_flag;
  SpaceFlags space_flags;
  std::string classifier_path, label_map_path, calibration_path, out_path, snapshot_path, truth_path, spec_path;

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate thresholds on a labeled support file");
  calibrate_cmd->add_option("--config", config_path, "Flat JSON config file");
  calibrate_cmd->add_option("--support", run.support_path, "Labeled support PACF file");
  calibrate_cmd->add_option("--classifier", classifier_path,
                            "Optional PACF of raw classifier weights, one record per base class");
  calibrate_cmd->add_option("--labels", label_map_path, "Label-map JSON sidecar to validate support labels against");
  calibrate_cmd->add_option("--out", out_path, "Calibration artifact JSON (default stdout)");
  calibrate_cmd->add_option("--seed", seed_flag, "Replay shuffle seed");
  calibrate_cmd->add_option("--passes", passes_flag, "Pseudo-novel replay passes");
  space_flags.add(calibrate_cmd);

  auto* stream_cmd = app.add_subcommand("stream", "Run the online decision loop over a stream file");
  stream_cmd->add_option("--calibration", calibration_path, "Calibration artifact JSON")->required();
  stream_cmd->add_option("--stream", run.stream_path, "Stream PACF file")->required();
  stream_cmd->add_option("--out", out_path, "Trace JSONL (default stdout)");
  stream_cmd->add_option("--snapshot", snapshot_path, "Final memory snapshot JSON");

  auto* eval_cmd = app.add_subcommand("eval", "Score a trace with the Strict/Greedy Hungarian protocols");
  eval_cmd->add_option("--trace", run.trace_path, "Trace JSONL")->required();
  eval_cmd->add_option("--truth", truth_path, "Ground-truth sidecar JSON")->required();
  eval_cmd->add_option("--out", out_path, "Report JSON (default stdout)");

  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a seeded vMF-mixture benchmark");
  simulate_cmd->add_option("--spec", spec_path, "Benchmark spec JSON")->required();
  simulate_cmd->add_option("--out", out_path, "Output directory")->required();
  simulate_cmd->add_option("--seed", seed_flag, "Override the spec seed");

  auto* regions_cmd = app.add_subcommand("regions", "Export per-sample routing statistics as CSV");
  regions_cmd->add_option("--calibration", calibration_path, "Calibration artifact JSON")->required();
  regions_cmd->add_option("--stream", run.stream_path, "Stream PACF file")->required();
  regions_cmd->add_option("--out", out_path, "CSV output (default stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "Report per-sample step latency percentiles");
  bench_cmd->add_option("--calibration", calibration_path, "Calibration artifact JSON")->required();
  bench_cmd->add_option("--stream", run.stream_path, "Stream PACF file")->required();
  bench_cmd->add_option("--out", out_path, "Latency JSON (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*calibrate_cmd) {
      if (!config_path.empty()) {
        const std::string cli_support = run.support_path;
        run.merge_json(read_json(config_path));
        if (!cli_support.empty()) run.support_path = cli_support;
      }
      space_flags.apply(run.space);
      if (seed_flag) run.replay_seed = *seed_flag;
      if (passes_flag) run.replay_passes = *passes_flag;
      run.validate();
      if (run.support_path.empty()) throw Error(ErrorKind::InvalidArgument, "--support is required");

      const FeatureSet support = read_feature_file(run.support_path);
      if (!label_map_path.empty()) check_labels(label_map_from_json(read_json(label_map_path)), support);
      const auto labels = dense_labels(support, run.support_path);
      std::optional<std::vector<Vec>> classifier;
      if (!classifier_path.empty()) classifier = read_feature_file(classifier_path).features;
      const auto artifact =
          calibrate(support.features, labels, run.space, run.replay_passes, run.replay_seed, classifier);
      write_or_print(out_path, to_json(artifact).dump(2) + "\n");
    } else if (*stream_cmd || *regions_cmd || *bench_cmd) {
      const auto artifact = artifact_from_json(read_json(calibration_path));
      const FeatureSet stream = read_feature_file(run.stream_path);
      if (stream.dim != static_cast<std::uint32_t>(artifact.cfg.d) && stream.size() > 0) {
        throw Error(ErrorKind::DimMismatch, run.stream_path + " has dimension " +
                                                std::to_string(stream.dim) + ", artifact expects " +
                                                std::to_string(artifact.cfg.d));
      }
      const StreamRun result = run_stream(artifact, stream.features, bench_cmd->parsed());
      if (*stream_cmd) {
        write_or_print(out_path, trace_jsonl(result.traces));
        if (!snapshot_path.empty()) {
          write_text(snapshot_path, snapshot_json(result.final_state, result.traces).dump(2) + "\n");
        }
      } else if (*regions_cmd) {
        write_or_print(out_path, regions_csv(result.traces));
      } else {
        const auto summary = summarize_latency(result.step_seconds);
        write_or_print(out_path, to_json(summary).dump(2) + "\n");
        if (summary.p50_ms >= 1.0) {
          std::cerr << "warning: median step latency " << summary.p50_ms << " ms exceeds 1 ms\n";
        }
      }
    } else if (*eval_cmd) {
      const auto predictions = predictions_from_jsonl(read_text(run.trace_path));
      const auto truth = truth_from_json(read_json(truth_path));
      const auto report = evaluate(make_stream_result(predictions, truth));
      write_or_print(out_path, to_json(report).dump(2) + "\n");
    } else if (*simulate_cmd) {
      auto spec = benchmark_spec_from_json(read_json(spec_path));
      if (seed_flag) spec.seed = *seed_flag;
      const Benchmark bench = generate_benchmark(spec);
      fs::create_directories(out_path);
      const auto d = static_cast<std::uint32_t>(spec.d);

      FeatureSet support{d, bench.support_features,
                         std::vector<std::int32_t>(bench.support_labels.begin(), bench.support_labels.end())};
      FeatureSet stream{d, bench.stream_features, std::nullopt};
      write_feature_file(fs::path(out_path) / "support.pacf", support);
      write_feature_file(fs::path(out_path) / "stream.pacf", stream);

      TruthSidecar truth;
      truth.labels.assign(bench.stream_labels.begin(), bench.stream_labels.end());
      for (int k = 0; k < spec.num_base_classes; ++k) truth.base_labels.push_back(k);
      truth.num_total_labels = spec.num_classes();
      write_text((fs::path(out_path) / "truth.json").string(), to_json(truth).dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "protostream/decision_engine.hpp"
#include "protostream/evaluation.hpp"
#include "protostream/feature_file.hpp"
#include "protostream/support_model.hpp"
#include "protostream/synthetic.hpp"

namespace protostream {

using Json = nlohmann::ordered_json;

struct RunConfig {
  SpaceConfig space;
  int replay_passes = 3;
  std::uint64_t replay_seed = 0;
  std::string support_path;
  std::string stream_path;
  std::string trace_path;
  std::string report_path;

  /// Overlays the keys present in a flat JSON object.
  void merge_json(const Json& j);
  void validate() const;
};

/// Everything the online stage needs, produced offline from the support set.
struct CalibrationArtifact {
  SpaceConfig cfg;
  SupportStats stats;
  BaseReferenceBank bank;
  ThresholdSet thresholds;
  CalibrationReport report;
};

/// Offline support stage: statistics, standardization, reference selection and
/// the three proxy calibrations. Labels must be dense class ids from 0.
CalibrationArtifact calibrate(const std::vector<Vec>& features, const std::vector<int>& labels,
                              SpaceConfig cfg, int passes, std::uint64_t seed,
                              const std::optional<std::vector<Vec>>& classifier_weights = std::nullopt);

StreamState initial_state(const CalibrationArtifact& artifact);

struct StreamRun {
  std::vector<DecisionTrace> traces;
  std::vector<double> step_seconds;  // filled only when timing is requested
  StreamState final_state;
};

StreamRun run_stream(const CalibrationArtifact& artifact, const std::vector<Vec>& raw_features,
                     bool time_steps = false);

struct LatencySummary {
  std::size_t samples = 0;
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
  double mean_ms = 0.0;
};

LatencySummary summarize_latency(std::vector<double> step_seconds);

/// Ground truth for a stream: per-sample labels and the base label set.
struct TruthSidecar {
  std::vector<std::int64_t> labels;
  std::vector<std::int64_t> base_labels;
  std::int64_t num_total_labels = 0;
};

StreamResult make_stream_result(const std::vector<std::int64_t>& predictions, const TruthSidecar& truth);

// JSON conversions. Key order is fixed; floats use shortest round-trip form.
Json to_json(const SpaceConfig& cfg);
SpaceConfig space_config_from_json(const Json& j);
Json to_json(const CalibrationArtifact& artifact);
CalibrationArtifact artifact_from_json(const Json& j);
Json to_json(const DecisionTrace& trace);
Json snapshot_json(const StreamState& state, const std::vector<DecisionTrace>& traces);
Json to_json(const EvalReport& report);
Json to_json(const TruthSidecar& truth);
TruthSidecar truth_from_json(const Json& j);
Json to_json(const LatencySummary& summary);
BenchmarkSpec benchmark_spec_from_json(const Json& j);

// Sidecar written next to exported PACF files: {"classes": {"name": id, ...}}.
// Ids are dense from 0; names[id] is the class name.
struct LabelMap {
  std::vector<std::string> names;
};

Json to_json(const LabelMap& map);
LabelMap label_map_from_json(const Json& j);
/// Throws InvalidArgument if a labeled record carries an id outside the map.
void check_labels(const LabelMap& map, const FeatureSet& set);

std::string trace_jsonl(const std::vector<DecisionTrace>& traces);
std::vector<std::int64_t> predictions_from_jsonl(const std::string& text);

/// CSV rows of (g_cos, g_mar, birth statistic, best attach, route, decision).
std::string regions_csv(const std::vector<DecisionTrace>& traces);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace protostream

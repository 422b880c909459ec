#include "protostream/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "protostream/error.hpp"

namespace protostream {

namespace {

std::string_view to_string(ReferenceSource s) {
  return s == ReferenceSource::Prototype ? "prototype" : "classifier";
}

ReferenceSource source_from_string(const std::string& s) {
  if (s == "prototype") return ReferenceSource::Prototype;
  if (s == "classifier") return ReferenceSource::Classifier;
  throw Error(ErrorKind::InvalidArgument, "unknown reference source '" + s + "'");
}

Json vectors_json(const std::vector<UnitEmbedding>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) arr.push_back(v.vec());
  return arr;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json fit_json(const ThresholdFit& fit) {
  return Json{{"tau", fit.tau},
              {"balanced_accuracy", fit.balanced_accuracy},
              {"candidate_count", fit.candidate_count}};
}

ThresholdFit fit_from_json(const Json& j) {
  return {j.at("tau").get<double>(), j.at("balanced_accuracy").get<double>(),
          j.at("candidate_count").get<std::size_t>()};
}

}  // namespace

void RunConfig::merge_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a flat JSON object");
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("d", space.d);
  take("epsilon", space.epsilon);
  take("temperature", space.temperature);
  take("dirichlet_alpha", space.dirichlet_alpha);
  take("maturity_beta", space.maturity_beta);
  take("spread_c", space.spread_c);
  take("replay_passes", replay_passes);
  take("replay_seed", replay_seed);
  take("support", support_path);
  take("stream", stream_path);
  take("trace", trace_path);
  take("report", report_path);
}

void RunConfig::validate() const {
  if (replay_passes < 1) throw Error(ErrorKind::InvalidArgument, "replay_passes must be >= 1");
}

CalibrationArtifact calibrate(const std::vector<Vec>& features, const std::vector<int>& labels,
                              SpaceConfig cfg, int passes, std::uint64_t seed,
                              const std::optional<std::vector<Vec>>& classifier_weights) {
  if (features.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "support features and labels differ in length");
  }
  CalibrationArtifact art;
  art.stats = compute_support_stats(features);
  cfg.d = static_cast<int>(art.stats.dim());
  cfg.validate();
  art.cfg = cfg;

  LabeledSupportSet support;
  support.labels = labels;
  support.num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  support.embeddings.reserve(features.size());
  for (const auto& h : features) support.embeddings.push_back(standardize(h, art.stats, cfg));
  support.validate();

  std::optional<std::vector<UnitEmbedding>> classifier_dirs;
  if (classifier_weights) {
    classifier_dirs.emplace();
    for (const auto& w : *classifier_weights) {
      classifier_dirs->push_back(whiten_direction(w, art.stats, cfg));
    }
  }
  art.bank = select_base_references(support, build_class_prototypes(support), std::move(classifier_dirs));

  art.report.routing = calibrate_routing(support, art.bank);
  art.report.birth = calibrate_birth(support, art.bank, cfg);
  art.report.create = calibrate_create(support, cfg, passes, seed);

  art.thresholds.tau_hi = art.report.routing.tau_hi;
  art.thresholds.tau_lo = art.report.routing.tau_lo;
  art.thresholds.tau_birth_raw = art.report.birth.tau_birth_raw;
  art.thresholds.sigma_pos = art.report.birth.sigma_pos;
  art.thresholds.tau_birth_sup = art.report.birth.tau_birth_sup;
  art.thresholds.tau_create = art.report.create.tau_create;
  return art;
}

StreamState initial_state(const CalibrationArtifact& artifact) {
  return StreamState(artifact.bank, artifact.thresholds, artifact.cfg);
}

StreamRun run_stream(const CalibrationArtifact& artifact, const std::vector<Vec>& raw_features,
                     bool time_steps) {
  StreamRun run{{}, {}, initial_state(artifact)};
  run.traces.reserve(raw_features.size());
  if (time_steps) run.step_seconds.reserve(raw_features.size());
  for (const auto& h : raw_features) {
    if (h.size() != static_cast<std::size_t>(artifact.cfg.d)) {
      throw Error(ErrorKind::DimMismatch, "stream feature length " + std::to_string(h.size()) +
                                              " vs calibrated d=" + std::to_string(artifact.cfg.d));
    }
    // Timed region covers standardization plus the full decision step.
    const auto start = std::chrono::steady_clock::now();
    const UnitEmbedding u = standardize(h, artifact.stats, artifact.cfg);
    run.traces.push_back(step(u, run.final_state));
    if (time_steps) {
      run.step_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
  }
  return run;
}

LatencySummary summarize_latency(std::vector<double> step_seconds) {
  LatencySummary s;
  s.samples = step_seconds.size();
  if (step_seconds.empty()) return s;
  std::sort(step_seconds.begin(), step_seconds.end());
  auto pct = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(step_seconds.size()))) ;
    return step_seconds[std::min(step_seconds.size() - 1, idx == 0 ? 0 : idx - 1)] * 1e3;
  };
  s.p50_ms = median(step_seconds) * 1e3;
  s.p90_ms = pct(0.90);
  s.p99_ms = pct(0.99);
  s.max_ms = step_seconds.back() * 1e3;
  s.mean_ms = std::accumulate(step_seconds.begin(), step_seconds.end(), 0.0) /
              static_cast<double>(step_seconds.size()) * 1e3;
  return s;
}

StreamResult make_stream_result(const std::vector<std::int64_t>& predictions,
                                const TruthSidecar& truth) {
  if (predictions.size() != truth.labels.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) +
                                               " trace records vs " +
                                               std::to_string(truth.labels.size()) + " truth labels");
  }
  StreamResult r;
  r.predictions = predictions;
  r.truths = truth.labels;
  r.base_labels.insert(truth.base_labels.begin(), truth.base_labels.end());
  r.num_total_labels = truth.num_total_labels;
  if (r.num_total_labels == 0) {
    std::set<std::int64_t> all(r.truths.begin(), r.truths.end());
    all.insert(r.base_labels.begin(), r.base_labels.end());
    r.num_total_labels = static_cast<std::int64_t>(all.size());
  }
  return r;
}

Json to_json(const SpaceConfig& cfg) {
  return Json{{"d", cfg.d},
              {"epsilon", cfg.epsilon},
              {"temperature", cfg.temperature},
              {"dirichlet_alpha", cfg.dirichlet_alpha},
              {"maturity_beta", cfg.maturity_beta},
              {"spread_c", cfg.spread_c}};
}

SpaceConfig space_config_from_json(const Json& j) {
  SpaceConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.epsilon = j.at("epsilon").get<double>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.dirichlet_alpha = j.at("dirichlet_alpha").get<double>();
  cfg.maturity_beta = j.at("maturity_beta").get<double>();
  cfg.spread_c = j.at("spread_c").get<double>();
  cfg.validate();
  return cfg;
}

Json to_json(const CalibrationArtifact& a) {
  Json flags = Json::array();
  for (auto f : a.bank.source_flags) flags.push_back(to_string(f));
  const auto& r = a.report;
  Json j;
  j["format"] = "protostream-calibration";
  j["version"] = 1;
  j["config"] = to_json(a.cfg);
  j["support_stats"] = Json{{"mean", a.stats.mean}, {"variance", a.stats.variance}};
  j["bank"] = Json{{"references", vectors_json(a.bank.references)},
                   {"class_sizes", a.bank.class_sizes},
                   {"median_base_size", a.bank.median_base_size},
                   {"source_flags", flags}};
  j["thresholds"] = Json{{"tau_hi", a.thresholds.tau_hi},
                         {"tau_lo", a.thresholds.tau_lo},
                         {"tau_birth_raw", a.thresholds.tau_birth_raw},
                         {"sigma_pos", a.thresholds.sigma_pos},
                         {"tau_birth_sup", a.thresholds.tau_birth_sup},
                         {"tau_create", a.thresholds.tau_create}};
  j["report"] = Json{
      {"routing", Json{{"fit", fit_json(r.routing.fit)},
                       {"margins_pos", r.routing.margins_pos},
                       {"margins_neg", r.routing.margins_neg},
                       {"base_affinity", r.routing.base_affinity}}},
      {"birth", Json{{"fit", fit_json(r.birth.fit)},
                     {"lambda_pos", r.birth.lambda_pos},
                     {"lambda_neg", r.birth.lambda_neg}}},
      {"create", Json{{"fit", fit_json(r.create.fit)},
                      {"degenerate", r.create.degenerate},
                      {"passes", r.create.passes},
                      {"replay_seed", r.create.seed},
                      {"positives", r.create.positives},
                      {"negatives", r.create.negatives}}}};
  return j;
}

CalibrationArtifact artifact_from_json(const Json& j) {
  if (j.value("format", std::string{}) != "protostream-calibration") {
    throw Error(ErrorKind::InvalidArgument, "not a calibration artifact");
  }
  CalibrationArtifact a;
  a.cfg = space_config_from_json(j.at("config"));
  a.stats.mean = j.at("support_stats").at("mean").get<Vec>();
  a.stats.variance = j.at("support_stats").at("variance").get<Vec>();
  const auto& bank = j.at("bank");
  for (const auto& v : bank.at("references")) {
    a.bank.references.push_back(UnitEmbedding::from_unit(v.get<Vec>()));
  }
  a.bank.class_sizes = bank.at("class_sizes").get<std::vector<std::int64_t>>();
  a.bank.median_base_size = bank.at("median_base_size").get<double>();
  for (const auto& f : bank.at("source_flags")) {
    a.bank.source_flags.push_back(source_from_string(f.get<std::string>()));
  }
  const auto& t = j.at("thresholds");
  a.thresholds = {t.at("tau_hi").get<double>(),        t.at("tau_lo").get<double>(),
                  t.at("tau_birth_raw").get<double>(), t.at("sigma_pos").get<double>(),
                  t.at("tau_birth_sup").get<double>(), t.at("tau_create").get<double>()};
  const auto& r = j.at("report");
  a.report.routing.tau_hi = a.thresholds.tau_hi;
  a.report.routing.tau_lo = a.thresholds.tau_lo;
  a.report.routing.fit = fit_from_json(r.at("routing").at("fit"));
  a.report.routing.margins_pos = r.at("routing").at("margins_pos").get<std::vector<double>>();
  a.report.routing.margins_neg = r.at("routing").at("margins_neg").get<std::vector<double>>();
  a.report.routing.base_affinity = r.at("routing").at("base_affinity").get<std::vector<double>>();
  a.report.birth.tau_birth_raw = a.thresholds.tau_birth_raw;
  a.report.birth.sigma_pos = a.thresholds.sigma_pos;
  a.report.birth.tau_birth_sup = a.thresholds.tau_birth_sup;
  a.report.birth.fit = fit_from_json(r.at("birth").at("fit"));
  a.report.birth.lambda_pos = r.at("birth").at("lambda_pos").get<std::vector<double>>();
  a.report.birth.lambda_neg = r.at("birth").at("lambda_neg").get<std::vector<double>>();
  const auto& c = r.at("create");
  a.report.create.tau_create = a.thresholds.tau_create;
  a.report.create.fit = fit_from_json(c.at("fit"));
  a.report.create.degenerate = c.at("degenerate").get<bool>();
  a.report.create.passes = c.at("passes").get<int>();
  a.report.create.seed = c.at("replay_seed").get<std::uint64_t>();
  a.report.create.positives = c.at("positives").get<std::vector<double>>();
  a.report.create.negatives = c.at("negatives").get<std::vector<double>>();
  return a;
}

Json to_json(const DecisionTrace& t) {
  Json j;
  j["step_index"] = t.step_index;
  j["route"] = to_string(t.route);
  j["g_cos"] = t.g_cos;
  j["g_mar"] = t.g_mar;
  j["birth_statistic"] = t.birth_statistic ? Json(*t.birth_statistic) : Json(nullptr);
  j["best_attach"] = t.best_attach ? Json{{"index", t.best_attach->index}, {"value", t.best_attach->value}}
                                   : Json(nullptr);
  j["decision"] = to_string(t.decision);
  j["label"] = t.label;
  j["tau_birth_used"] = t.tau_birth_used;
  j["eta_used"] = t.eta_used;
  return j;
}

Json snapshot_json(const StreamState& state, const std::vector<DecisionTrace>& traces) {
  Json novel = Json::array();
  for (const auto& p : state.memory.novel) {
    novel.push_back(Json{{"count", p.count}, {"resultant", p.resultant}, {"direction", p.direction.vec()}});
  }
  double lo = state.thresholds.tau_birth_sup;
  double hi = state.thresholds.tau_birth_sup;
  std::int64_t tightened = 0;
  std::int64_t creations = 0;
  for (const auto& t : traces) {
    lo = std::min(lo, t.tau_birth_used);
    hi = std::max(hi, t.tau_birth_used);
    tightened += t.tau_birth_used < state.thresholds.tau_birth_sup ? 1 : 0;
    creations += t.decision == DecisionKind::Create ? 1 : 0;
  }
  Json j;
  j["step_count"] = state.step_index;
  j["k_base"] = state.memory.k_base();
  j["k_total"] = state.memory.k_total();
  j["base_counts"] = state.memory.base_counts;
  j["novel"] = novel;
  j["tau_birth_current"] = state.tau_birth_current;
  j["eta"] = state.eta;
  j["threshold_trajectory"] = Json{{"tau_birth_sup", state.thresholds.tau_birth_sup},
                                   {"min", lo},
                                   {"max", hi},
                                   {"final", state.tau_birth_current},
                                   {"tightened_steps", tightened}};
  j["create_events"] = creations;
  return j;
}

Json to_json(const EvalReport& r) {
  auto subset = [](const SubsetAccuracy& a) {
    return Json{{"all", a.all}, {"old", a.old_classes}, {"new", a.new_classes}};
  };
  return Json{{"strict", subset(r.strict)},
              {"greedy", subset(r.greedy)},
              {"estimated_cluster_count", r.estimated_cluster_count},
              {"retained_count", r.retained_count},
              {"dropped_sample_count", r.dropped_sample_count}};
}

Json to_json(const TruthSidecar& t) {
  return Json{{"labels", t.labels}, {"base_labels", t.base_labels}, {"num_total_labels", t.num_total_labels}};
}

TruthSidecar truth_from_json(const Json& j) {
  TruthSidecar t;
  t.labels = j.at("labels").get<std::vector<std::int64_t>>();
  t.base_labels = j.at("base_labels").get<std::vector<std::int64_t>>();
  t.num_total_labels = j.value("num_total_labels", std::int64_t{0});
  return t;
}

Json to_json(const LatencySummary& s) {
  return Json{{"samples", s.samples}, {"p50_ms", s.p50_ms}, {"p90_ms", s.p90_ms},
              {"p99_ms", s.p99_ms},   {"max_ms", s.max_ms}, {"mean_ms", s.mean_ms}};
}

BenchmarkSpec benchmark_spec_from_json(const Json& j) {
  BenchmarkSpec s;
  s.d = j.at("d").get<int>();
  s.num_base_classes = j.at("num_base_classes").get<int>();
  s.num_novel_classes = j.value("num_novel_classes", 0);
  const auto& kappa = j.at("kappa_true");
  s.kappa_true = kappa.is_array() ? kappa.get<std::vector<double>>() : std::vector<double>{kappa.get<double>()};
  if (j.contains("samples_per_class")) {
    std::tie(s.samples_per_class_support, s.samples_per_class_stream) = BenchmarkSpec::split_by_fraction(
        j.at("samples_per_class").get<int>(), j.value("support_fraction", 0.5));
  } else {
    s.samples_per_class_support = j.at("samples_per_class_support").get<int>();
    s.samples_per_class_stream = j.at("samples_per_class_stream").get<int>();
  }
  s.seed = j.value("seed", std::uint64_t{0});
  const std::string scheme = j.value("mean_direction_scheme", std::string{"random-orthonormal"});
  if (scheme == "random-orthonormal") {
    s.mean_scheme = MeanScheme::RandomOrthonormal;
  } else if (scheme == "uniform-random") {
    s.mean_scheme = MeanScheme::UniformRandom;
  } else {
    throw Error(ErrorKind::SpecInfeasible, "unknown mean_direction_scheme '" + scheme + "'");
  }
  s.validate();
  return s;
}

std::string trace_jsonl(const std::vector<DecisionTrace>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<std::int64_t> predictions_from_jsonl(const std::string& text) {
  std::vector<std::int64_t> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(Json::parse(line).at("label").get<std::int64_t>());
  }
  return out;
}

std::string regions_csv(const std::vector<DecisionTrace>& traces) {
  std::string out = "step_index,g_cos,g_mar,birth_statistic,best_attach,route,decision\n";
  for (const auto& t : traces) {
    out += std::to_string(t.step_index);
    out += ',' + format_double(t.g_cos);
    out += ',' + format_double(t.g_mar);
    out += ',' + (t.birth_statistic ? format_double(*t.birth_statistic) : std::string{});
    out += ',' + (t.best_attach ? format_double(t.best_attach->value) : std::string{});
    out += ',';
    out += to_string(t.route);
    out += ',';
    out += to_string(t.decision);
    out += '\n';
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "short write to " + path);
}

Json to_json(const LabelMap& map) {
  Json classes = Json::object();
  for (std::size_t id = 0; id < map.names.size(); ++id) classes[map.names[id]] = id;
  return Json{{"classes", classes}};
}

LabelMap label_map_from_json(const Json& j) {
  const auto& classes = j.at("classes");
  if (!classes.is_object()) throw Error(ErrorKind::InvalidArgument, "label map: classes must be an object");
  LabelMap map;
  map.names.assign(classes.size(), std::string{});
  std::vector<bool> seen(classes.size(), false);
  for (const auto& [name, value] : classes.items()) {
    const auto id = value.get<std::int64_t>();
    if (id < 0 || id >= static_cast<std::int64_t>(classes.size()) || seen[static_cast<std::size_t>(id)]) {
      throw Error(ErrorKind::InvalidArgument, "label map ids must be dense from 0, got " + std::to_string(id));
    }
    seen[static_cast<std::size_t>(id)] = true;
    map.names[static_cast<std::size_t>(id)] = name;
  }
  return map;
}

void check_labels(const LabelMap& map, const FeatureSet& set) {
  if (!set.labels) return;
  for (const auto label : *set.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= map.names.size()) {
      throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(label) + " not in label map");
    }
  }
}

}  // namespace protostream

#include "protostream/decision_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "protostream/error.hpp"

namespace protostream {

namespace {

int argmax_first(const std::vector<double>& values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> index_range(int first, int last) {
  std::vector<int> ids(static_cast<std::size_t>(std::max(last - first, 0)));
  std::iota(ids.begin(), ids.end(), first);
  return ids;
}

double round_half_up(double x) { return std::floor(x + 0.5); }

}  // namespace

std::string_view to_string(Route route) {
  switch (route) {
    case Route::BaseOnly: return "BaseOnly";
    case Route::NovelOnly: return "NovelOnly";
    case Route::Full: return "Full";
    case Route::EmptyCandidate: return "EmptyCandidate";
  }
  return "?";
}

std::string_view to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::AssignBase: return "AssignBase";
    case DecisionKind::AssignNovel: return "AssignNovel";
    case DecisionKind::Create: return "Create";
  }
  return "?";
}

PrototypeMemory::PrototypeMemory(BaseReferenceBank bank)
    : base(std::move(bank)), base_counts(base.class_sizes) {
  if (base_counts.size() != base.references.size()) {
    throw Error(ErrorKind::LengthMismatch, "bank class sizes do not match reference count");
  }
}

std::int64_t PrototypeMemory::count(int k) const {
  return k < k_base() ? base_counts[static_cast<std::size_t>(k)]
                      : novel[static_cast<std::size_t>(k - k_base())].count;
}

double PrototypeMemory::cosine(int k, const UnitEmbedding& u) const {
  return k < k_base() ? base.references[static_cast<std::size_t>(k)].dot(u)
                      : novel[static_cast<std::size_t>(k - k_base())].direction.dot(u);
}

StreamState::StreamState(BaseReferenceBank bank, ThresholdSet thr, SpaceConfig config)
    : memory(std::move(bank)), thresholds(thr), cfg(config) {
  cfg.validate();
  if (memory.base.dim() != static_cast<std::size_t>(cfg.d)) {
    throw Error(ErrorKind::DimMismatch, "bank dimension " + std::to_string(memory.base.dim()) +
                                            " vs config d=" + std::to_string(cfg.d));
  }
  log_p0 = log_uniform_density(cfg.d);
  tau_birth_current = thresholds.tau_birth_sup;
}

std::vector<double> score_memory(const UnitEmbedding& u, const StreamState& state,
                                 const std::vector<int>& candidate_ids) {
  if (candidate_ids.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidates to score");
  const auto& mem = state.memory;
  const int k_total = mem.k_total();
  double total = 0.0;
  for (std::int64_t n : mem.base_counts) total += static_cast<double>(n);
  for (const auto& p : mem.novel) total += static_cast<double>(p.count);
  const double alpha = state.cfg.dirichlet_alpha;
  const double log_norm = std::log(total + static_cast<double>(k_total) * alpha);

  std::vector<double> scores;
  scores.reserve(candidate_ids.size());
  for (int k : candidate_ids) {
    if (k < 0 || k >= k_total) {
      throw Error(ErrorKind::InvalidArgument, "candidate id " + std::to_string(k) + " out of range");
    }
    const double log_prior = std::log(static_cast<double>(mem.count(k)) + alpha) - log_norm;
    scores.push_back(mem.cosine(k, u) / state.cfg.temperature + log_prior);
  }
  return scores;
}

RouteResult route_candidates(const UnitEmbedding& u, const StreamState& state) {
  const auto& mem = state.memory;
  const int k_base = mem.k_base();
  if (k_base < 2) throw Error(ErrorKind::TooFewClasses, "routing needs two base references");

  double first = -std::numeric_limits<double>::infinity();
  double second = first;
  for (int k = 0; k < k_base; ++k) {
    const double c = mem.base.references[static_cast<std::size_t>(k)].dot(u);
    if (c > first) {
      second = first;
      first = c;
    } else if (c > second) {
      second = c;
    }
  }
  RouteResult r;
  r.g_cos = first;
  r.g_mar = first - second;
  if (r.g_mar >= state.thresholds.tau_hi) {
    r.route = Route::BaseOnly;
    r.candidates = index_range(0, k_base);
  } else if (r.g_cos < state.thresholds.tau_lo) {
    r.candidates = index_range(k_base, mem.k_total());
    r.route = r.candidates.empty() ? Route::EmptyCandidate : Route::NovelOnly;
  } else {
    r.route = Route::Full;
    r.candidates = index_range(0, mem.k_total());
  }
  return r;
}

double birth_statistic(const UnitEmbedding& u, const StreamState& state,
                       const std::vector<int>& candidate_ids) {
  if (candidate_ids.empty()) throw Error(ErrorKind::EmptyCandidates, "birth statistic needs candidates");
  double best = -std::numeric_limits<double>::infinity();
  for (int k : candidate_ids) best = std::max(best, state.memory.cosine(k, u));
  return best / state.cfg.temperature - state.log_p0;
}

AttachResult attach_score(const UnitEmbedding& u, const StreamState& state) {
  const auto& novel = state.memory.novel;
  if (novel.empty()) throw Error(ErrorKind::NoNovelPrototypes, "attach score needs a novel prototype");
  AttachResult best{-1, -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < novel.size(); ++i) {
    const auto& p = novel[i];
    const double a = attach_value(static_cast<double>(p.count), norm(p.resultant),
                                  p.direction.dot(u), state.cfg.d, state.log_p0);
    if (a > best.value) best = {state.memory.k_base() + static_cast<int>(i), a};
  }
  return best;
}

void update_birth_threshold(StreamState& state) {
  const auto& mem = state.memory;
  const double med_base = mem.base.median_base_size;
  const double cutoff = round_half_up(std::pow(med_base, state.cfg.maturity_beta));

  std::vector<double> strengths;
  std::vector<double> sizes;
  for (const auto& p : mem.novel) {
    const auto n = static_cast<double>(p.count);
    if (n < cutoff) continue;
    strengths.push_back((n - 1.0) / (n + 1.0) * (norm(p.resultant) / n) / state.cfg.temperature -
                        state.log_p0);
    sizes.push_back(n);
  }
  const double sup = state.thresholds.tau_birth_sup;
  if (strengths.size() < 2) {
    state.eta = 0.0;
    state.tau_birth_current = sup;
    return;
  }
  const double center = median(strengths);
  std::vector<double> deviations;
  deviations.reserve(strengths.size());
  for (double s : strengths) deviations.push_back(std::abs(s - center));
  const double bank = center - median(std::move(deviations));
  const double m_t = median(std::move(sizes));
  state.eta = m_t / (m_t + med_base);
  state.tau_birth_current = std::min(sup, (1.0 - state.eta) * sup + state.eta * bank);
}

DecisionTrace step(const UnitEmbedding& u, StreamState& state) {
  auto& mem = state.memory;
  if (u.dim() != static_cast<std::size_t>(state.cfg.d)) {
    throw Error(ErrorKind::DimMismatch, "sample dimension " + std::to_string(u.dim()) +
                                            " vs engine d=" + std::to_string(state.cfg.d));
  }
  DecisionTrace trace;
  trace.step_index = state.step_index;
  trace.tau_birth_used = state.tau_birth_current;
  trace.eta_used = state.eta;

  const RouteResult routed = route_candidates(u, state);
  trace.route = routed.route;
  trace.g_cos = routed.g_cos;
  trace.g_mar = routed.g_mar;

  auto assign_best = [&](const std::vector<int>& ids) {
    const int k = ids[static_cast<std::size_t>(argmax_first(score_memory(u, state, ids)))];
    trace.label = k;
    trace.decision = k < mem.k_base() ? DecisionKind::AssignBase : DecisionKind::AssignNovel;
  };
  auto create = [&] {
    trace.label = mem.k_total();
    trace.decision = DecisionKind::Create;
  };

  if (routed.route == Route::BaseOnly) {
    assign_best(routed.candidates);
  } else if (routed.route == Route::EmptyCandidate) {
    create();
  } else {
    const double lambda = birth_statistic(u, state, routed.candidates);
    trace.birth_statistic = lambda;
    if (lambda >= state.tau_birth_current) {
      assign_best(routed.candidates);
    } else if (mem.novel.empty()) {
      create();
    } else {
      const AttachResult best = attach_score(u, state);
      trace.best_attach = best;
      if (best.value >= state.thresholds.tau_create) {
        trace.label = best.index;
        trace.decision = DecisionKind::AssignNovel;
      } else {
        create();
      }
    }
  }

  switch (trace.decision) {
    case DecisionKind::AssignBase:
      ++mem.base_counts[static_cast<std::size_t>(trace.label)];
      break;
    case DecisionKind::AssignNovel: {
      auto& p = mem.novel[static_cast<std::size_t>(trace.label - mem.k_base())];
      ++p.count;
      const auto comps = u.components();
      for (std::size_t j = 0; j < comps.size(); ++j) p.resultant[j] += comps[j];
      p.direction = UnitEmbedding::normalize(p.resultant);
      break;
    }
    case DecisionKind::Create:
      mem.novel.push_back(NovelPrototype{1, u.vec(), u});
      break;
  }

  update_birth_threshold(state);
  ++state.step_index;
  return trace;
}

}  // namespace protostream

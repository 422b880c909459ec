#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "protostream/geometry.hpp"
#include "protostream/support_model.hpp"

namespace protostream {

struct NovelPrototype {
  std::int64_t count = 0;
  Vec resultant;
  UnitEmbedding direction;
};

/// Fixed base references plus the evolving novel bank. Prototype index k is
/// global: [0, K_base) are base classes, [K_base, K_t) are novel in creation order.
struct PrototypeMemory {
  BaseReferenceBank base;
  std::vector<std::int64_t> base_counts;
  std::vector<NovelPrototype> novel;

  explicit PrototypeMemory(BaseReferenceBank bank);
  PrototypeMemory() = default;

  int k_base() const { return base.num_classes(); }
  int k_total() const { return k_base() + static_cast<int>(novel.size()); }
  std::int64_t count(int k) const;
  double cosine(int k, const UnitEmbedding& u) const;
};

struct StreamState {
  PrototypeMemory memory;
  ThresholdSet thresholds;
  SpaceConfig cfg;
  double tau_birth_current = 0.0;
  double eta = 0.0;
  std::int64_t step_index = 0;
  double log_p0 = 0.0;

  StreamState(BaseReferenceBank bank, ThresholdSet thresholds, SpaceConfig cfg);
};

enum class Route { BaseOnly, NovelOnly, Full, EmptyCandidate };
enum class DecisionKind { AssignBase, AssignNovel, Create };

std::string_view to_string(Route route);
std::string_view to_string(DecisionKind kind);

struct RouteResult {
  Route route = Route::Full;
  std::vector<int> candidates;
  double g_cos = 0.0;
  double g_mar = 0.0;
};

struct AttachResult {
  int index = -1;  // global prototype index
  double value = 0.0;
};

struct DecisionTrace {
  std::int64_t step_index = 0;
  Route route = Route::Full;
  double g_cos = 0.0;
  double g_mar = 0.0;
  std::optional<double> birth_statistic;
  std::optional<AttachResult> best_attach;
  DecisionKind decision = DecisionKind::AssignBase;
  int label = 0;
  double tau_birth_used = 0.0;
  double eta_used = 0.0;
};

/// Dirichlet-smoothed memory scores for the candidate ids (same order). The
/// size prior is normalized over every active prototype.
std::vector<double> score_memory(const UnitEmbedding& u, const StreamState& state,
                                 const std::vector<int>& candidate_ids);

RouteResult route_candidates(const UnitEmbedding& u, const StreamState& state);

double birth_statistic(const UnitEmbedding& u, const StreamState& state,
                       const std::vector<int>& candidate_ids);

/// Best concentration-aware attach score over all novel prototypes; ties go to
/// the earliest-created prototype.
AttachResult attach_score(const UnitEmbedding& u, const StreamState& state);

/// Refreshes tau_birth_current and eta from the mature part of the novel bank.
void update_birth_threshold(StreamState& state);

/// One online decision plus the memory and threshold updates that follow it.
DecisionTrace step(const UnitEmbedding& u, StreamState& state);

}  // namespace protostream

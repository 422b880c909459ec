#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "protostream/geometry.hpp"

namespace protostream {

/// Standardized, labeled support embeddings over classes 0..num_classes-1.
struct LabeledSupportSet {
  std::vector<UnitEmbedding> embeddings;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return embeddings.size(); }
  std::size_t dim() const { return embeddings.empty() ? 0 : embeddings.front().dim(); }
  std::vector<std::int64_t> class_sizes() const;

  /// Checks equal lengths, label range, consistent dimension and non-empty classes.
  void validate() const;
};

enum class ReferenceSource { Prototype, Classifier };

struct BaseReferenceBank {
  std::vector<UnitEmbedding> references;
  std::vector<std::int64_t> class_sizes;
  double median_base_size = 0.0;
  std::vector<ReferenceSource> source_flags;

  int num_classes() const { return static_cast<int>(references.size()); }
  std::size_t dim() const { return references.empty() ? 0 : references.front().dim(); }
};

struct ThresholdSet {
  double tau_hi = 0.0;
  double tau_lo = 0.0;
  double tau_birth_raw = 0.0;
  double sigma_pos = 0.0;
  double tau_birth_sup = 0.0;
  double tau_create = 0.0;
};

struct ThresholdFit {
  double tau = 0.0;
  double balanced_accuracy = 0.0;
  std::size_t candidate_count = 0;
};

struct RoutingCalibration {
  double tau_hi = 0.0;
  double tau_lo = 0.0;
  std::vector<double> margins_pos;
  std::vector<double> margins_neg;
  std::vector<double> base_affinity;  // r_i^+
  ThresholdFit fit;
};

struct BirthCalibration {
  double tau_birth_raw = 0.0;
  double sigma_pos = 0.0;
  double tau_birth_sup = 0.0;
  std::vector<double> lambda_pos;
  std::vector<double> lambda_neg;
  ThresholdFit fit;
};

struct CreateCalibration {
  double tau_create = 0.0;
  std::vector<double> positives;  // later encounters of a class within a pass
  std::vector<double> negatives;  // first encounter of a class within a pass
  ThresholdFit fit;
  bool degenerate = false;  // one or both response sets were empty
  std::uint64_t seed = 0;
  int passes = 0;
};

struct CalibrationReport {
  RoutingCalibration routing;
  BirthCalibration birth;
  CreateCalibration create;
};

std::vector<UnitEmbedding> build_class_prototypes(const LabeledSupportSet& support);

/// Picks the whole bank from either prototypes or whitened classifier directions,
/// whichever has better support top-1 accuracy (ties broken by mean top-1/top-2
/// margin, then in favour of prototypes).
BaseReferenceBank select_base_references(
    const LabeledSupportSet& support, std::vector<UnitEmbedding> prototypes,
    std::optional<std::vector<UnitEmbedding>> classifier_dirs = std::nullopt);

/// Balanced-accuracy-maximizing threshold. Candidates are min-1, midpoints of
/// consecutive sorted unique values of P u N, and max+1; the smallest maximizer wins.
ThresholdFit optimize_balanced_threshold(std::span<const double> positives,
                                         std::span<const double> negatives);

/// Unbiased sample standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

/// Median; the mean of the two middle values for even lengths. Throws EmptyInput.
double median(std::vector<double> values);

RoutingCalibration calibrate_routing(const LabeledSupportSet& support,
                                     const BaseReferenceBank& bank);

BirthCalibration calibrate_birth(const LabeledSupportSet& support, const BaseReferenceBank& bank,
                                 const SpaceConfig& cfg);

CreateCalibration calibrate_create(const LabeledSupportSet& support, const SpaceConfig& cfg,
                                   int passes = 3, std::uint64_t seed = 0);

}  // namespace protostream

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace protostream {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Hyperparameters of the standardized embedding space and the scores defined on it.
struct SpaceConfig {
  int d = 0;
  double epsilon = 1e-5;
  double temperature = 1.0;
  double dirichlet_alpha = 1e6;
  double maturity_beta = 0.5;
  double spread_c = 1.0;

  /// Throws InvalidArgument when any field is out of range.
  void validate() const;
};

struct SupportStats {
  Vec mean;
  Vec variance;

  std::size_t dim() const { return mean.size(); }
};

/// A direction on the unit sphere. Construction normalizes, so every live
/// instance satisfies | |u| - 1 | <= 1e-6.
class UnitEmbedding {
 public:
  UnitEmbedding() = default;

  /// Normalizes `v`; throws ZeroVector when |v| < 1e-12.
  static UnitEmbedding normalize(Vec v);
  /// Adopts `v` unchanged; throws InvalidArgument unless it is already unit-norm.
  static UnitEmbedding from_unit(Vec v);

  std::span<const double> components() const { return components_; }
  const Vec& vec() const { return components_; }
  std::size_t dim() const { return components_.size(); }
  double operator[](std::size_t i) const { return components_[i]; }

  double dot(const UnitEmbedding& other) const;

  friend bool operator==(const UnitEmbedding&, const UnitEmbedding&) = default;

 private:
  explicit UnitEmbedding(Vec v) : components_(std::move(v)) {}
  Vec components_;
};

SupportStats compute_support_stats(std::span<const Vec> features);

/// Centered, per-coordinate whitened feature before normalization:
/// (h - m) * (v + eps)^(-1/2).
Vec whiten(std::span<const double> h, const SupportStats& stats, const SpaceConfig& cfg);

UnitEmbedding standardize(std::span<const double> h, const SupportStats& stats,
                          const SpaceConfig& cfg);

/// Whitens a raw classifier weight vector without centering and normalizes it.
UnitEmbedding whiten_direction(std::span<const double> w, const SupportStats& stats,
                               const SpaceConfig& cfg);

/// log of the uniform surface density on S^(d-1).
double log_uniform_density(int d);

/// Moment-based vMF concentration estimate with small-sample shrinkage.
/// Mean resultant length is clamped to [0, 1 - 1e-6]; a single sample gives 0.
double vmf_concentration(double resultant_norm, double n, int d);

/// Concentration-aware attach score of a cluster with `count` members and the
/// given resultant norm, for a sample at `cosine` to its mean direction.
double attach_value(double count, double resultant_norm, double cosine, int d, double log_p0);

inline constexpr double kResultantClamp = 1.0 - 1e-6;
inline constexpr double kZeroNorm = 1e-12;

}  // namespace protostream

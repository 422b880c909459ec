#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "protostream/geometry.hpp"
#include "protostream/support_model.hpp"

namespace protostream {

using Rng = std::mt19937_64;

enum class MeanScheme { RandomOrthonormal, UniformRandom };

/// Seeded vMF-mixture benchmark layout. Base class k draws
/// samples_per_class_support + samples_per_class_stream samples, split in that
/// order into support and stream; every novel class draws
/// samples_per_class_stream stream samples.
struct BenchmarkSpec {
  int d = 8;
  int num_base_classes = 4;
  int num_novel_classes = 4;
  std::vector<double> kappa_true;  // one per class (base first), or a single shared value
  int samples_per_class_support = 40;
  int samples_per_class_stream = 40;
  std::uint64_t seed = 0;
  MeanScheme mean_scheme = MeanScheme::RandomOrthonormal;

  int num_classes() const { return num_base_classes + num_novel_classes; }
  double kappa(int cls) const;
  double support_fraction() const;

  /// Splits `per_class_total` base samples by `fraction` (rounded half up).
  static std::pair<int, int> split_by_fraction(int per_class_total, double fraction);

  /// Throws SpecInfeasible.
  void validate() const;
};

struct Benchmark {
  std::vector<Vec> support_features;
  std::vector<int> support_labels;
  std::vector<Vec> stream_features;
  std::vector<int> stream_labels;
  std::vector<UnitEmbedding> class_means;
};

/// Wood's rejection sampler for vMF(mu, kappa); kappa = 0 is uniform on the sphere.
std::vector<Vec> sample_vmf(const UnitEmbedding& mu, double kappa, std::size_t count, Rng& rng);

Benchmark generate_benchmark(const BenchmarkSpec& spec);

}  // namespace protostream

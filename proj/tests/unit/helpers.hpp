#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "protostream/decision_engine.hpp"
#include "protostream/geometry.hpp"
#include "protostream/support_model.hpp"

namespace protostream::testing {

inline UnitEmbedding unit(Vec v) { return UnitEmbedding::normalize(std::move(v)); }

inline UnitEmbedding axis(int d, int k) {
  Vec v(static_cast<std::size_t>(d), 0.0);
  v[static_cast<std::size_t>(k)] = 1.0;
  return UnitEmbedding::normalize(std::move(v));
}

/// Three mutually orthogonal classes in d=3, `per_class` samples sitting
/// exactly on their class axis.
inline LabeledSupportSet orthogonal_toy(int per_class = 1) {
  LabeledSupportSet s;
  s.num_classes = 3;
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < per_class; ++i) {
      s.embeddings.push_back(axis(3, k));
      s.labels.push_back(k);
    }
  }
  return s;
}

inline BaseReferenceBank bank_from(std::vector<UnitEmbedding> refs, std::vector<std::int64_t> sizes) {
  BaseReferenceBank bank;
  bank.references = std::move(refs);
  bank.class_sizes = std::move(sizes);
  std::vector<double> s(bank.class_sizes.begin(), bank.class_sizes.end());
  bank.median_base_size = median(s);
  bank.source_flags.assign(bank.references.size(), ReferenceSource::Prototype);
  return bank;
}

inline UnitEmbedding random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec v(static_cast<std::size_t>(d));
  for (double& x : v) x = n(rng);
  return UnitEmbedding::normalize(std::move(v));
}

}  // namespace protostream::testing

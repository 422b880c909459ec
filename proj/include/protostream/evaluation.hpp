#pragma once

#include <cstdint>
#include <set>
#include <vector>

namespace protostream {

struct StreamResult {
  std::vector<std::int64_t> predictions;
  std::vector<std::int64_t> truths;
  std::int64_t num_total_labels = 0;  // |Y_Q|
  std::set<std::int64_t> base_labels;  // Y_S

  void validate() const;
};

struct SubsetAccuracy {
  double all = 0.0;
  double old_classes = 0.0;
  double new_classes = 0.0;
};

struct EvalReport {
  SubsetAccuracy strict;
  SubsetAccuracy greedy;
  std::int64_t estimated_cluster_count = 0;
  std::int64_t retained_count = 0;
  std::int64_t dropped_sample_count = 0;
};

struct Retention {
  std::set<std::int64_t> retained;
  std::vector<bool> dropped;  // per sample
};

Retention retain_top_clusters(const StreamResult& result);

using ProfitMatrix = std::vector<std::vector<double>>;

struct Assignment {
  std::vector<int> row_to_col;  // -1 for unmatched rows
  double total = 0.0;
};

/// Maximum-profit one-to-one matching of min(R, C) pairs (Kuhn-Munkres).
Assignment hungarian_assign(const ProfitMatrix& profit);

SubsetAccuracy strict_accuracy(const StreamResult& result, const Retention& retention);
SubsetAccuracy greedy_accuracy(const StreamResult& result, const Retention& retention);

/// Retention followed by both protocols.
EvalReport evaluate(const StreamResult& result);

}  // namespace protostream

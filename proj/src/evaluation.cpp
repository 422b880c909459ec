#include "protostream/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

#include "protostream/error.hpp"

namespace protostream {

namespace {

struct Subsets {
  std::vector<std::int64_t> labels;  // Y_Q, ascending
  std::vector<std::int64_t> base;    // Y_S, ascending
  std::vector<std::int64_t> novel;   // Y_Q \ Y_S, ascending
};

Subsets label_subsets(const StreamResult& result) {
  std::set<std::int64_t> all(result.truths.begin(), result.truths.end());
  all.insert(result.base_labels.begin(), result.base_labels.end());
  Subsets s;
  s.labels.assign(all.begin(), all.end());
  s.base.assign(result.base_labels.begin(), result.base_labels.end());
  for (std::int64_t l : s.labels) {
    if (!result.base_labels.contains(l)) s.novel.push_back(l);
  }
  return s;
}

bool is_old(const StreamResult& result, std::size_t j) {
  return result.base_labels.contains(result.truths[j]);
}

// Matches the clusters seen among the selected samples to `labels` and
// returns the number of those samples the matching gets right.
std::int64_t matched_count(const StreamResult& result, const Retention& retention,
                           const std::vector<std::int64_t>& labels, auto&& selected) {
  std::map<std::int64_t, std::size_t> cluster_row;
  std::map<std::int64_t, std::size_t> label_col;
  for (std::size_t c = 0; c < labels.size(); ++c) label_col.emplace(labels[c], c);
  for (std::size_t j = 0; j < result.predictions.size(); ++j) {
    if (!selected(j) || retention.dropped[j]) continue;
    cluster_row.emplace(result.predictions[j], 0);
  }
  if (cluster_row.empty() || labels.empty()) return 0;
  std::size_t row = 0;
  for (auto& [cluster, r] : cluster_row) r = row++;

  ProfitMatrix profit(cluster_row.size(), std::vector<double>(labels.size(), 0.0));
  for (std::size_t j = 0; j < result.predictions.size(); ++j) {
    if (!selected(j) || retention.dropped[j]) continue;
    const auto col = label_col.find(result.truths[j]);
    if (col == label_col.end()) continue;
    profit[cluster_row.at(result.predictions[j])][col->second] += 1.0;
  }
  return static_cast<std::int64_t>(hungarian_assign(profit).total);
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void StreamResult::validate() const {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                               std::to_string(truths.size()) + " truths");
  }
  if (num_total_labels < 0) throw Error(ErrorKind::InvalidArgument, "negative label count");
}

Retention retain_top_clusters(const StreamResult& result) {
  result.validate();
  std::map<std::int64_t, std::int64_t> sizes;
  for (std::int64_t p : result.predictions) ++sizes[p];
  std::vector<std::pair<std::int64_t, std::int64_t>> order(sizes.begin(), sizes.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Retention out;
  const auto keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(result.num_total_labels));
  for (std::size_t i = 0; i < keep; ++i) out.retained.insert(order[i].first);
  out.dropped.resize(result.predictions.size());
  for (std::size_t j = 0; j < result.predictions.size(); ++j) {
    out.dropped[j] = !out.retained.contains(result.predictions[j]);
  }
  return out;
}

Assignment hungarian_assign(const ProfitMatrix& profit) {
  Assignment out;
  const std::size_t rows = profit.size();
  const std::size_t cols = rows == 0 ? 0 : profit.front().size();
  out.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;

  double max_entry = -std::numeric_limits<double>::infinity();
  for (const auto& r : profit) {
    if (r.size() != cols) throw Error(ErrorKind::DimMismatch, "ragged profit matrix");
    for (double v : r) max_entry = std::max(max_entry, v);
  }
  max_entry = std::max(max_entry, 0.0);

  // Square cost matrix; padding has profit 0. 1-based potentials formulation.
  const std::size_t n = std::max(rows, cols);
  auto cost = [&](std::size_t i, std::size_t j) {
    const double p = (i < rows && j < cols) ? profit[i][j] : 0.0;
    return max_entry - p;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match[j] - 1;
    if (i < rows && j - 1 < cols) out.row_to_col[i] = static_cast<int>(j - 1);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (out.row_to_col[i] >= 0) out.total += profit[i][static_cast<std::size_t>(out.row_to_col[i])];
  }
  return out;
}

SubsetAccuracy strict_accuracy(const StreamResult& result, const Retention& retention) {
  result.validate();
  const Subsets subsets = label_subsets(result);

  // Build the single global matching once, then score each subset with it.
  std::map<std::int64_t, std::size_t> cluster_row;
  for (std::size_t j = 0; j < result.predictions.size(); ++j) {
    if (!retention.dropped[j]) cluster_row.emplace(result.predictions[j], 0);
  }
  std::vector<std::int64_t> row_cluster;
  for (auto& [cluster, r] : cluster_row) {
    r = row_cluster.size();
    row_cluster.push_back(cluster);
  }
  std::map<std::int64_t, std::size_t> label_col;
  for (std::size_t c = 0; c < subsets.labels.size(); ++c) label_col.emplace(subsets.labels[c], c);

  std::map<std::int64_t, std::int64_t> mapping;
  if (!row_cluster.empty() && !subsets.labels.empty()) {
    ProfitMatrix profit(row_cluster.size(), std::vector<double>(subsets.labels.size(), 0.0));
    for (std::size_t j = 0; j < result.predictions.size(); ++j) {
      if (retention.dropped[j]) continue;
      profit[cluster_row.at(result.predictions[j])][label_col.at(result.truths[j])] += 1.0;
    }
    const Assignment a = hungarian_assign(profit);
    for (std::size_t r = 0; r < a.row_to_col.size(); ++r) {
      if (a.row_to_col[r] >= 0) {
        mapping[row_cluster[r]] = subsets.labels[static_cast<std::size_t>(a.row_to_col[r])];
      }
    }
  }

  std::int64_t hit_all = 0, hit_old = 0, hit_new = 0, n_old = 0, n_new = 0;
  for (std::size_t j = 0; j < result.predictions.size(); ++j) {
    const bool old = is_old(result, j);
    (old ? n_old : n_new) += 1;
    if (retention.dropped[j]) continue;
    const auto it = mapping.find(result.predictions[j]);
    if (it == mapping.end() || it->second != result.truths[j]) continue;
    ++hit_all;
    (old ? hit_old : hit_new) += 1;
  }
  return {ratio(hit_all, static_cast<std::int64_t>(result.truths.size())), ratio(hit_old, n_old),
          ratio(hit_new, n_new)};
}

SubsetAccuracy greedy_accuracy(const StreamResult& result, const Retention& retention) {
  result.validate();
  const Subsets subsets = label_subsets(result);
  std::int64_t n_old = 0;
  for (std::size_t j = 0; j < result.truths.size(); ++j) n_old += is_old(result, j) ? 1 : 0;
  const auto n_all = static_cast<std::int64_t>(result.truths.size());
  const std::int64_t n_new = n_all - n_old;

  const std::int64_t hit_old =
      matched_count(result, retention, subsets.base, [&](std::size_t j) { return is_old(result, j); });
  const std::int64_t hit_new =
      matched_count(result, retention, subsets.novel, [&](std::size_t j) { return !is_old(result, j); });

  // Size-weighted combination of the two subsets, computed from the counts.
  return {ratio(hit_old + hit_new, n_all), ratio(hit_old, n_old), ratio(hit_new, n_new)};
}

EvalReport evaluate(const StreamResult& result) {
  const Retention retention = retain_top_clusters(result);
  EvalReport report;
  report.strict = strict_accuracy(result, retention);
  report.greedy = greedy_accuracy(result, retention);
  report.estimated_cluster_count =
      static_cast<std::int64_t>(std::set<std::int64_t>(result.predictions.begin(), result.predictions.end()).size());
  report.retained_count = static_cast<std::int64_t>(retention.retained.size());
  report.dropped_sample_count = std::count(retention.dropped.begin(), retention.dropped.end(), true);
  return report;
}

}  // namespace protostream

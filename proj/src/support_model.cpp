#include "protostream/support_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "protostream/error.hpp"

namespace protostream {

namespace {

struct TopTwo {
  double first = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  int first_index = -1;

  void push(double value, int index) {
    if (value > first) {
      second = first;
      first = value;
      first_index = index;
    } else if (value > second) {
      second = value;
    }
  }
  double margin() const { return first - second; }
};

std::vector<double> cosines_to(const UnitEmbedding& u, const std::vector<UnitEmbedding>& refs) {
  std::vector<double> out(refs.size());
  for (std::size_t k = 0; k < refs.size(); ++k) out[k] = u.dot(refs[k]);
  return out;
}

struct BankScore {
  std::size_t correct = 0;
  double mean_margin = 0.0;
};

BankScore score_bank(const LabeledSupportSet& support, const std::vector<UnitEmbedding>& bank) {
  BankScore score;
  double margin_sum = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    TopTwo top;
    const auto cos = cosines_to(support.embeddings[i], bank);
    for (std::size_t k = 0; k < cos.size(); ++k) top.push(cos[k], static_cast<int>(k));
    if (top.first_index == support.labels[i]) ++score.correct;
    margin_sum += cos.size() >= 2 ? top.margin() : 0.0;
  }
  score.mean_margin = margin_sum / static_cast<double>(support.size());
  return score;
}

void require_classes(const LabeledSupportSet& support, int minimum, const char* what) {
  if (support.num_classes < minimum) {
    throw Error(ErrorKind::TooFewClasses, std::string(what) + " needs at least " +
                                              std::to_string(minimum) + " base classes, got " +
                                              std::to_string(support.num_classes));
  }
}

void check_bank(const LabeledSupportSet& support, const BaseReferenceBank& bank) {
  if (bank.num_classes() != support.num_classes) {
    throw Error(ErrorKind::DimMismatch, "bank has " + std::to_string(bank.num_classes()) +
                                            " references for " +
                                            std::to_string(support.num_classes) + " classes");
  }
  if (bank.dim() != support.dim()) {
    throw Error(ErrorKind::DimMismatch, "bank dimension differs from support dimension");
  }
}

struct EpisodicPrototype {
  double count = 0.0;
  Vec resultant;
  UnitEmbedding direction;
};

}  // namespace

std::vector<std::int64_t> LabeledSupportSet::class_sizes() const {
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int label : labels) {
    if (label >= 0 && label < num_classes) ++sizes[static_cast<std::size_t>(label)];
  }
  return sizes;
}

void LabeledSupportSet::validate() const {
  if (embeddings.empty()) throw Error(ErrorKind::EmptyInput, "support set is empty");
  if (embeddings.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(embeddings.size()) + " embeddings vs " +
                                               std::to_string(labels.size()) + " labels");
  }
  const std::size_t d = dim();
  for (const auto& u : embeddings) {
    if (u.dim() != d) throw Error(ErrorKind::DimMismatch, "support embeddings differ in length");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw Error(ErrorKind::InvalidArgument, "support label " + std::to_string(label) +
                                                  " outside [0, " + std::to_string(num_classes) +
                                                  ")");
    }
  }
  const auto sizes = class_sizes();
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) {
      throw Error(ErrorKind::InvalidArgument, "class " + std::to_string(k) + " has no support");
    }
  }
}

std::vector<UnitEmbedding> build_class_prototypes(const LabeledSupportSet& support) {
  support.validate();
  const std::size_t d = support.dim();
  std::vector<Vec> sums(static_cast<std::size_t>(support.num_classes), Vec(d, 0.0));
  for (std::size_t i = 0; i < support.size(); ++i) {
    auto& sum = sums[static_cast<std::size_t>(support.labels[i])];
    const auto u = support.embeddings[i].components();
    for (std::size_t j = 0; j < d; ++j) sum[j] += u[j];
  }
  std::vector<UnitEmbedding> prototypes;
  prototypes.reserve(sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k) {
    try {
      prototypes.push_back(UnitEmbedding::normalize(std::move(sums[k])));
    } catch (const Error&) {
      throw Error(ErrorKind::ZeroVector, "class " + std::to_string(k) + " resultant cancels out");
    }
  }
  return prototypes;
}

BaseReferenceBank select_base_references(const LabeledSupportSet& support,
                                         std::vector<UnitEmbedding> prototypes,
                                         std::optional<std::vector<UnitEmbedding>> classifier_dirs) {
  support.validate();
  const auto k_base = static_cast<std::size_t>(support.num_classes);
  auto check = [&](const std::vector<UnitEmbedding>& bank, const char* name) {
    if (bank.size() != k_base) {
      throw Error(ErrorKind::DimMismatch, std::string(name) + " count " +
                                              std::to_string(bank.size()) + " != " +
                                              std::to_string(k_base));
    }
    for (const auto& r : bank) {
      if (r.dim() != support.dim()) {
        throw Error(ErrorKind::DimMismatch, std::string(name) + " dimension mismatch");
      }
    }
  };
  check(prototypes, "prototype");

  BaseReferenceBank bank;
  bank.class_sizes = support.class_sizes();
  std::vector<double> sizes(bank.class_sizes.begin(), bank.class_sizes.end());
  bank.median_base_size = median(std::move(sizes));

  bool use_classifier = false;
  if (classifier_dirs) {
    check(*classifier_dirs, "classifier direction");
    const BankScore proto = score_bank(support, prototypes);
    const BankScore clf = score_bank(support, *classifier_dirs);
    use_classifier = clf.correct > proto.correct ||
                     (clf.correct == proto.correct && clf.mean_margin > proto.mean_margin);
  }
  if (use_classifier) {
    bank.references = std::move(*classifier_dirs);
    bank.source_flags.assign(k_base, ReferenceSource::Classifier);
  } else {
    bank.references = std::move(prototypes);
    bank.source_flags.assign(k_base, ReferenceSource::Prototype);
  }
  return bank;
}

ThresholdFit optimize_balanced_threshold(std::span<const double> positives,
                                         std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorKind::EmptyInput, "balanced threshold needs positive and negative responses");
  }
  std::vector<double> pos(positives.begin(), positives.end());
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> values;
  values.reserve(pos.size() + neg.size());
  std::merge(pos.begin(), pos.end(), neg.begin(), neg.end(), std::back_inserter(values));
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> candidates;
  candidates.reserve(values.size() + 1);
  candidates.push_back(values.front() - 1.0);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    candidates.push_back((values[i] + values[i + 1]) * 0.5);
  }
  candidates.push_back(values.back() + 1.0);

  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());
  ThresholdFit best{candidates.front(), -1.0, candidates.size()};
  // Candidates ascend, so both cursors only move forward.
  std::size_t pos_below = 0;
  std::size_t neg_below = 0;
  for (double tau : candidates) {
    while (pos_below < pos.size() && pos[pos_below] < tau) ++pos_below;
    while (neg_below < neg.size() && neg[neg_below] < tau) ++neg_below;
    const double tpr = static_cast<double>(pos.size() - pos_below) / n_pos;
    const double tnr = static_cast<double>(neg_below) / n_neg;
    const double ba = 0.5 * (tpr + tnr);
    if (ba > best.balanced_accuracy) {
      best.tau = tau;
      best.balanced_accuracy = ba;
    }
  }
  return best;
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

RoutingCalibration calibrate_routing(const LabeledSupportSet& support,
                                     const BaseReferenceBank& bank) {
  support.validate();
  require_classes(support, 3, "routing calibration");
  check_bank(support, bank);

  RoutingCalibration out;
  out.margins_pos.reserve(support.size());
  out.margins_neg.reserve(support.size());
  out.base_affinity.reserve(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto cos = cosines_to(support.embeddings[i], bank.references);
    TopTwo all;
    TopTwo masked;
    for (std::size_t k = 0; k < cos.size(); ++k) {
      all.push(cos[k], static_cast<int>(k));
      if (static_cast<int>(k) != support.labels[i]) masked.push(cos[k], static_cast<int>(k));
    }
    out.margins_pos.push_back(all.margin());
    out.margins_neg.push_back(masked.margin());
    out.base_affinity.push_back(all.first);
  }
  out.fit = optimize_balanced_threshold(out.margins_pos, out.margins_neg);
  out.tau_hi = out.fit.tau;
  const double floor = *std::min_element(out.base_affinity.begin(), out.base_affinity.end()) -
                       sample_stddev(out.base_affinity);
  out.tau_lo = std::min(out.tau_hi, floor);
  return out;
}

BirthCalibration calibrate_birth(const LabeledSupportSet& support, const BaseReferenceBank& bank,
                                 const SpaceConfig& cfg) {
  support.validate();
  require_classes(support, 2, "birth calibration");
  check_bank(support, bank);
  const double log_p0 = log_uniform_density(static_cast<int>(support.dim()));
  const double inv_t = 1.0 / cfg.temperature;

  BirthCalibration out;
  std::vector<double> true_cos;
  true_cos.reserve(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto cos = cosines_to(support.embeddings[i], bank.references);
    double best = -std::numeric_limits<double>::infinity();
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cos.size(); ++k) {
      best = std::max(best, cos[k]);
      if (static_cast<int>(k) != support.labels[i]) best_other = std::max(best_other, cos[k]);
    }
    out.lambda_pos.push_back(best * inv_t - log_p0);
    out.lambda_neg.push_back(best_other * inv_t - log_p0);
    true_cos.push_back(cos[static_cast<std::size_t>(support.labels[i])]);
  }
  out.fit = optimize_balanced_threshold(out.lambda_pos, out.lambda_neg);
  out.tau_birth_raw = out.fit.tau;
  out.sigma_pos = sample_stddev(true_cos);
  out.tau_birth_sup = out.tau_birth_raw - cfg.spread_c * out.sigma_pos / cfg.temperature;
  return out;
}

CreateCalibration calibrate_create(const LabeledSupportSet& support, const SpaceConfig& cfg,
                                   int passes, std::uint64_t seed) {
  support.validate();
  if (passes < 1) throw Error(ErrorKind::InvalidArgument, "replay needs at least one pass");
  const int d = static_cast<int>(support.dim());
  if (cfg.d != 0 && cfg.d != d) {
    throw Error(ErrorKind::DimMismatch, "support dimension " + std::to_string(d) + " vs config d=" +
                                            std::to_string(cfg.d));
  }
  const double log_p0 = log_uniform_density(d);

  // Canonical order first so the replay depends only on (seed, passes).
  std::vector<std::size_t> canonical(support.size());
  std::iota(canonical.begin(), canonical.end(), std::size_t{0});
  std::stable_sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
    if (support.labels[a] != support.labels[b]) return support.labels[a] < support.labels[b];
    return support.embeddings[a].vec() < support.embeddings[b].vec();
  });

  CreateCalibration out;
  out.seed = seed;
  out.passes = passes;
  std::mt19937_64 rng(seed);
  const auto k_base = static_cast<std::size_t>(support.num_classes);
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<std::size_t> order = canonical;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::optional<EpisodicPrototype>> memory(k_base);
    std::vector<std::size_t> active;  // labels in creation order

    for (std::size_t idx : order) {
      const auto& u = support.embeddings[idx];
      const auto label = static_cast<std::size_t>(support.labels[idx]);
      if (!active.empty()) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k : active) {
          const auto& proto = *memory[k];
          best = std::max(best, attach_value(proto.count, norm(proto.resultant),
                                             proto.direction.dot(u), d, log_p0));
        }
        (memory[label] ? out.positives : out.negatives).push_back(best);
      }
      auto& slot = memory[label];
      if (!slot) {
        slot = EpisodicPrototype{1.0, u.vec(), u};
        active.push_back(label);
      } else {
        slot->count += 1.0;
        const auto comps = u.components();
        for (std::size_t j = 0; j < comps.size(); ++j) slot->resultant[j] += comps[j];
        slot->direction = UnitEmbedding::normalize(slot->resultant);
      }
    }
  }

  if (!out.positives.empty() && !out.negatives.empty()) {
    out.fit = optimize_balanced_threshold(out.positives, out.negatives);
    out.tau_create = out.fit.tau;
  } else {
    out.degenerate = true;
    if (!out.positives.empty()) {
      out.tau_create = *std::min_element(out.positives.begin(), out.positives.end()) - 1.0;
    } else if (!out.negatives.empty()) {
      out.tau_create = *std::max_element(out.negatives.begin(), out.negatives.end()) + 1.0;
    } else {
      out.tau_create = 0.0;
    }
    // A one-sided fallback classifies every observed response correctly; with
    // nothing observed there is no evidence either way.
    const bool observed = !out.positives.empty() || !out.negatives.empty();
    out.fit = ThresholdFit{out.tau_create, observed ? 1.0 : 0.5, 1};
  }
  return out;
}

}  // namespace protostream

#include "protostream/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "protostream/error.hpp"

namespace protostream {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimMismatch,
                "dot of lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) {
  double acc = 0.0;
  for (double x : a) acc += x * x;
  return std::sqrt(acc);
}

void SpaceConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (d < 2) fail("d must be >= 2, got " + std::to_string(d));
  if (!(epsilon > 0)) fail("epsilon must be > 0");
  if (!(temperature > 0)) fail("temperature must be > 0");
  if (!(dirichlet_alpha > 0)) fail("dirichlet_alpha must be > 0");
  if (!(maturity_beta > 0 && maturity_beta <= 1)) fail("maturity_beta must be in (0, 1]");
  if (!(spread_c >= 0)) fail("spread_c must be >= 0");
}

UnitEmbedding UnitEmbedding::normalize(Vec v) {
  const double n = protostream::norm(v);
  if (!(n >= kZeroNorm)) {
    throw Error(ErrorKind::ZeroVector, "vector norm " + std::to_string(n) + " is degenerate");
  }
  for (double& x : v) x /= n;
  return UnitEmbedding(std::move(v));
}

UnitEmbedding UnitEmbedding::from_unit(Vec v) {
  const double n = protostream::norm(v);
  if (!(std::abs(n - 1.0) <= 1e-6)) {
    throw Error(ErrorKind::InvalidArgument, "expected a unit vector, norm is " + std::to_string(n));
  }
  return UnitEmbedding(std::move(v));
}

double UnitEmbedding::dot(const UnitEmbedding& other) const {
  return protostream::dot(components_, other.components_);
}

SupportStats compute_support_stats(std::span<const Vec> features) {
  if (features.empty()) throw Error(ErrorKind::EmptyInput, "support set has no features");
  const std::size_t d = features.front().size();
  if (d == 0) throw Error(ErrorKind::EmptyInput, "zero-dimensional features");

  SupportStats stats{Vec(d, 0.0), Vec(d, 0.0)};
  for (const auto& h : features) {
    if (h.size() != d) {
      throw Error(ErrorKind::DimMismatch,
                  "feature of length " + std::to_string(h.size()) + ", expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += h[j];
  }
  const double count = static_cast<double>(features.size());
  for (double& m : stats.mean) m /= count;

  // Two-pass population variance.
  for (const auto& h : features) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = h[j] - stats.mean[j];
      stats.variance[j] += dev * dev;
    }
  }
  for (double& v : stats.variance) v /= count;
  return stats;
}

Vec whiten(std::span<const double> h, const SupportStats& stats, const SpaceConfig& cfg) {
  if (h.size() != stats.dim() || stats.variance.size() != stats.dim()) {
    throw Error(ErrorKind::DimMismatch, "feature length " + std::to_string(h.size()) +
                                            " vs support dimension " + std::to_string(stats.dim()));
  }
  Vec out(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) {
    out[j] = (h[j] - stats.mean[j]) / std::sqrt(stats.variance[j] + cfg.epsilon);
  }
  return out;
}

UnitEmbedding standardize(std::span<const double> h, const SupportStats& stats,
                          const SpaceConfig& cfg) {
  return UnitEmbedding::normalize(whiten(h, stats, cfg));
}

UnitEmbedding whiten_direction(std::span<const double> w, const SupportStats& stats,
                               const SpaceConfig& cfg) {
  if (w.size() != stats.dim()) {
    throw Error(ErrorKind::DimMismatch, "classifier direction length " + std::to_string(w.size()) +
                                            " vs support dimension " + std::to_string(stats.dim()));
  }
  Vec out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    out[j] = w[j] / std::sqrt(stats.variance[j] + cfg.epsilon);
  }
  return UnitEmbedding::normalize(std::move(out));
}

double log_uniform_density(int d) {
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "log_uniform_density needs d >= 2");
  const double half = 0.5 * static_cast<double>(d);
  return std::lgamma(half) - std::numbers::ln2 - half * std::log(std::numbers::pi);
}

double vmf_concentration(double resultant_norm, double n, int d) {
  if (n <= 1.0) return 0.0;
  const double rbar = std::clamp(resultant_norm / n, 0.0, kResultantClamp);
  const double r2 = rbar * rbar;
  return rbar * (static_cast<double>(d) - r2) / (1.0 - r2) * ((n - 1.0) / (n + 1.0));
}

double attach_value(double count, double resultant_norm, double cosine, int d, double log_p0) {
  return std::log(count) + vmf_concentration(resultant_norm, count, d) * cosine - log_p0;
}

}  // namespace protostream

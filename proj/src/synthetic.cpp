#include "protostream/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "protostream/error.hpp"

namespace protostream {

namespace {

enum : std::uint64_t { kMeanStream = 0x6d65616e, kClassStream = 0x636c6173, kOrderStream = 0x6f726472 };

Rng derived_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

Vec gaussian_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(d);
  for (double& x : v) x = normal(rng);
  return v;
}

std::vector<UnitEmbedding> draw_means(const BenchmarkSpec& spec) {
  Rng rng = derived_rng(spec.seed, kMeanStream);
  const auto d = static_cast<std::size_t>(spec.d);
  std::vector<UnitEmbedding> means;
  means.reserve(static_cast<std::size_t>(spec.num_classes()));
  while (means.size() < static_cast<std::size_t>(spec.num_classes())) {
    Vec v = gaussian_vector(d, rng);
    if (spec.mean_scheme == MeanScheme::RandomOrthonormal) {
      // Modified Gram-Schmidt against the accepted means; redraw on collapse.
      for (const auto& q : means) {
        const double proj = dot(v, q.components());
        for (std::size_t j = 0; j < d; ++j) v[j] -= proj * q[j];
      }
      if (norm(v) < 1e-8) continue;
    }
    means.push_back(UnitEmbedding::normalize(std::move(v)));
  }
  return means;
}

}  // namespace

double BenchmarkSpec::kappa(int cls) const {
  return kappa_true.size() == 1 ? kappa_true.front() : kappa_true.at(static_cast<std::size_t>(cls));
}

double BenchmarkSpec::support_fraction() const {
  const int total = samples_per_class_support + samples_per_class_stream;
  return total == 0 ? 0.0 : static_cast<double>(samples_per_class_support) / total;
}

std::pair<int, int> BenchmarkSpec::split_by_fraction(int per_class_total, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::SpecInfeasible, "support fraction must lie in (0, 1)");
  }
  const int support = static_cast<int>(std::floor(fraction * per_class_total + 0.5));
  return {support, per_class_total - support};
}

void BenchmarkSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::SpecInfeasible, msg); };
  if (d < 2) fail("d must be >= 2");
  if (num_base_classes < 1) fail("need at least one base class");
  if (num_novel_classes < 0) fail("negative novel class count");
  if (samples_per_class_support < 1 || samples_per_class_stream < 1) {
    fail("support and stream counts per class must be >= 1");
  }
  if (kappa_true.size() != 1 && kappa_true.size() != static_cast<std::size_t>(num_classes())) {
    fail("kappa_true must hold one value or one per class");
  }
  for (double k : kappa_true) {
    if (!(k >= 0.0) || !std::isfinite(k)) fail("kappa_true must be finite and >= 0");
  }
  if (mean_scheme == MeanScheme::RandomOrthonormal && d < num_classes()) {
    fail("orthonormal means need d >= class count (" + std::to_string(num_classes()) + ")");
  }
}

std::vector<Vec> sample_vmf(const UnitEmbedding& mu, double kappa, std::size_t count, Rng& rng) {
  if (!(kappa >= 0.0)) throw Error(ErrorKind::InvalidArgument, "kappa must be >= 0");
  const std::size_t d = mu.dim();
  const double dm1 = static_cast<double>(d) - 1.0;
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  std::gamma_distribution<double> gamma(0.5 * dm1, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<Vec> out;
  out.reserve(count);
  while (out.size() < count) {
    double w = 0.0;
    for (;;) {
      const double ga = gamma(rng);
      const double gb = gamma(rng);
      const double z = ga / (ga + gb);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double accept = kappa * w + dm1 * std::log(1.0 - x0 * w) - c;
      if (accept >= std::log(uniform(rng))) break;
    }
    // Tangent direction: project a Gaussian draw off mu.
    Vec v = gaussian_vector(d, rng);
    const double proj = dot(v, mu.components());
    for (std::size_t j = 0; j < d; ++j) v[j] -= proj * mu[j];
    const double vn = norm(v);
    if (vn < 1e-12) continue;
    const double tangent = std::sqrt(std::max(0.0, 1.0 - w * w));
    Vec x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = w * mu[j] + tangent * v[j] / vn;
    out.push_back(UnitEmbedding::normalize(std::move(x)).vec());
  }
  return out;
}

Benchmark generate_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  Benchmark bench;
  bench.class_means = draw_means(spec);

  std::vector<std::pair<Vec, int>> stream;
  for (int cls = 0; cls < spec.num_classes(); ++cls) {
    Rng rng = derived_rng(spec.seed, kClassStream, static_cast<std::uint64_t>(cls));
    const bool base = cls < spec.num_base_classes;
    const auto n_support = base ? static_cast<std::size_t>(spec.samples_per_class_support) : 0;
    const auto n_total = n_support + static_cast<std::size_t>(spec.samples_per_class_stream);
    auto samples = sample_vmf(bench.class_means[static_cast<std::size_t>(cls)], spec.kappa(cls),
                              n_total, rng);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i < n_support) {
        bench.support_features.push_back(std::move(samples[i]));
        bench.support_labels.push_back(cls);
      } else {
        stream.emplace_back(std::move(samples[i]), cls);
      }
    }
  }
  Rng order_rng = derived_rng(spec.seed, kOrderStream);
  std::shuffle(stream.begin(), stream.end(), order_rng);
  for (auto& [x, label] : stream) {
    bench.stream_features.push_back(std::move(x));
    bench.stream_labels.push_back(label);
  }
  return bench;
}

}  // namespace protostream

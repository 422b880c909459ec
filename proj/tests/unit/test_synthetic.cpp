#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "protostream/error.hpp"
#include "protostream/synthetic.hpp"

using namespace protostream;

namespace {

UnitEmbedding e0(int d) {
  Vec v(static_cast<std::size_t>(d), 0.0);
  v[0] = 1.0;
  return UnitEmbedding::normalize(v);
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("vmf samples are unit vectors") {
    Rng rng(1);
    for (int d : {2, 3, 16, 128}) {
      for (double kappa : {0.0, 1.0, 50.0, 1e6}) {
        for (const auto& x : sample_vmf(e0(d), kappa, 200, rng)) {
          REQUIRE(std::abs(norm(x) - 1.0) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("kappa zero is uniform on the sphere") {
    Rng rng(2);
    const auto xs = sample_vmf(e0(3), 0.0, 10000, rng);
    Vec r(3, 0.0);
    for (const auto& x : xs)
      for (std::size_t j = 0; j < 3; ++j) r[j] += x[j];
    CHECK(norm(r) / 10000.0 <= 0.05);
  }

  TEST_CASE("large kappa concentrates at the mean") {
    Rng rng(3);
    const auto mu = UnitEmbedding::normalize(Vec{1, 2, 3});
    double min_cos = 1.0;
    for (const auto& x : sample_vmf(mu, 1e4, 1000, rng)) min_cos = std::min(min_cos, mu.dot(UnitEmbedding::from_unit(x)));
    CHECK(min_cos >= 0.99);
  }

  TEST_CASE("mean cosine matches the vmf expectation in d=3") {
    // E[mu.x] = coth(kappa) - 1/kappa on S^2.
    Rng rng(4);
    const double kappa = 5.0;
    const auto xs = sample_vmf(e0(3), kappa, 20000, rng);
    double mean = 0.0;
    for (const auto& x : xs) mean += x[0];
    mean /= static_cast<double>(xs.size());
    CHECK(mean == doctest::Approx(1.0 / std::tanh(kappa) - 1.0 / kappa).epsilon(0.01));
  }

  TEST_CASE("split arithmetic") {
    BenchmarkSpec spec;
    spec.d = 4;
    spec.num_base_classes = 2;
    spec.num_novel_classes = 0;
    spec.kappa_true = {20.0};
    const auto [s, q] = BenchmarkSpec::split_by_fraction(4, 0.5);
    CHECK(s == 2);
    CHECK(q == 2);
    spec.samples_per_class_support = s;
    spec.samples_per_class_stream = q;
    CHECK(spec.support_fraction() == 0.5);
    const auto b = generate_benchmark(spec);
    CHECK(b.support_features.size() == 4);
    CHECK(b.stream_features.size() == 4);
    for (int l : b.stream_labels) CHECK(l < 2);
    CHECK(BenchmarkSpec::split_by_fraction(5, 0.5).first == 3);
    CHECK_THROWS_AS(BenchmarkSpec::split_by_fraction(5, 1.0), Error);
  }

  TEST_CASE("benchmark layout and determinism") {
    BenchmarkSpec spec;
    spec.d = 8;
    spec.num_base_classes = 3;
    spec.num_novel_classes = 2;
    spec.kappa_true = {10, 20, 30, 40, 50};
    spec.samples_per_class_support = 5;
    spec.samples_per_class_stream = 7;
    spec.seed = 1234;
    const auto a = generate_benchmark(spec);
    const auto b = generate_benchmark(spec);
    CHECK(a.support_features == b.support_features);
    CHECK(a.stream_features == b.stream_features);
    CHECK(a.stream_labels == b.stream_labels);
    CHECK(a.support_features.size() == 15);
    CHECK(a.stream_features.size() == 5 * 7);
    for (int k = 0; k < 5; ++k) {
      CHECK(std::count(a.stream_labels.begin(), a.stream_labels.end(), k) == 7);
    }
    for (std::size_t i = 0; i < a.class_means.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(a.class_means[i].dot(a.class_means[j])) <= 1e-12);
    spec.seed = 1235;
    CHECK(generate_benchmark(spec).stream_features != a.stream_features);
  }

  TEST_CASE("class sample means converge to the class means") {
    BenchmarkSpec spec;
    spec.d = 16;
    spec.num_base_classes = 3;
    spec.num_novel_classes = 3;
    spec.kappa_true = {50.0};
    spec.samples_per_class_support = 100;
    spec.samples_per_class_stream = 200;
    spec.seed = 5;
    spec.mean_scheme = MeanScheme::UniformRandom;
    const auto b = generate_benchmark(spec);
    std::vector<Vec> sums(6, Vec(16, 0.0));
    for (std::size_t i = 0; i < b.stream_features.size(); ++i)
      for (std::size_t j = 0; j < 16; ++j) sums[static_cast<std::size_t>(b.stream_labels[i])][j] += b.stream_features[i][j];
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(UnitEmbedding::normalize(sums[k]).dot(b.class_means[k]) >= 0.95);
    }
  }

  TEST_CASE("infeasible specs") {
    BenchmarkSpec spec;
    spec.d = 4;
    spec.num_base_classes = 3;
    spec.num_novel_classes = 3;
    spec.kappa_true = {10.0};
    try {
      generate_benchmark(spec);
      FAIL("expected SpecInfeasible");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SpecInfeasible);
    }
    spec.mean_scheme = MeanScheme::UniformRandom;
    CHECK_NOTHROW(generate_benchmark(spec));
    spec.kappa_true = {1.0, 2.0};
    CHECK_THROWS_AS(generate_benchmark(spec), Error);
    spec.kappa_true = {-1.0};
    CHECK_THROWS_AS(generate_benchmark(spec), Error);
  }
}

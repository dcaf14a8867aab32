#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "plugcast/rng.hpp"

using namespace plugcast;

TEST_CASE("same seed reproduces every draw kind exactly") {
  Rng a(1234567);
  Rng b(1234567);
  const std::array<double, 3> weights = {0.2, 0.5, 0.3};
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.uniform() == b.uniform());
    CHECK(a.uniform(-3.0, 7.0) == b.uniform(-3.0, 7.0));
    CHECK(a.below(97) == b.below(97));
    CHECK(a.normal() == b.normal());
    CHECK(a.categorical(weights) == b.categorical(weights));
  }
  std::vector<int> va(50), vb(50);
  std::iota(va.begin(), va.end(), 0);
  std::iota(vb.begin(), vb.end(), 0);
  a.shuffle(va);
  b.shuffle(vb);
  CHECK(va == vb);
}

TEST_CASE("different seeds diverge") {
  Rng a(1);
  Rng b(2);
  bool differs = false;
  for (int i = 0; i < 16 && !differs; ++i) differs = a.next_u64() != b.next_u64();
  CHECK(differs);
}

TEST_CASE("uniform stays in [0, 1) and covers both halves") {
  Rng rng(42);
  int low = 0;
  int high = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    (u < 0.5 ? low : high)++;
  }
  CHECK(low > 45000);
  CHECK(high > 45000);
}

TEST_CASE("uniform(lo, hi) respects its interval") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-2.5, 4.0);
    REQUIRE(u >= -2.5);
    REQUIRE(u < 4.0);
  }
}

TEST_CASE("below(n) covers exactly [0, n)") {
  Rng rng(99);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::int64_t v = rng.below(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    counts[static_cast<std::size_t>(v)]++;
  }
  // Each bucket should be near 10000; a 20% band is far looser than the
  // binomial noise floor, so a failure means a real bias bug.
  for (int c : counts) {
    CHECK(c > 8000);
    CHECK(c < 12000);
  }
}

TEST_CASE("normal moments match the standard normal") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("normal(mean, stddev) shifts and scales") {
  Rng rng(5);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.normal(10.0, 0.5);
  CHECK(std::abs(sum / n - 10.0) < 0.02);
}

TEST_CASE("categorical never draws a zero-weight index") {
  Rng rng(314);
  const std::array<double, 4> weights = {0.5, 0.0, 0.25, 0.25};
  std::array<int, 4> counts = {0, 0, 0, 0};
  for (int i = 0; i < 20000; ++i) {
    const int k = rng.categorical(weights);
    REQUIRE(k >= 0);
    REQUIRE(k < 4);
    counts[static_cast<std::size_t>(k)]++;
  }
  CHECK(counts[1] == 0);
  // Frequencies track the weights.
  CHECK(counts[0] > 9000);
  CHECK(counts[2] > 4000);
  CHECK(counts[3] > 4000);
}

TEST_CASE("categorical with a single weight always returns 0") {
  Rng rng(8);
  const std::array<double, 1> weights = {3.0};
  for (int i = 0; i < 100; ++i) CHECK(rng.categorical(weights) == 0);
}

TEST_CASE("shuffle produces a permutation and actually moves things") {
  Rng rng(777);
  std::vector<int> v(200);
  std::iota(v.begin(), v.end(), 0);
  const std::vector<int> original = v;
  rng.shuffle(v);
  CHECK(v != original);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == original);
}

TEST_CASE("shuffle of empty and singleton vectors is a no-op") {
  Rng rng(1);
  std::vector<int> empty;
  rng.shuffle(empty);
  CHECK(empty.empty());
  std::vector<int> one = {42};
  rng.shuffle(one);
  CHECK(one == std::vector<int>{42});
}

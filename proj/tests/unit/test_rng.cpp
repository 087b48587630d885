#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "fedfair/rng.hpp"

using fedfair::RngStream;
using fedfair::StreamId;
using fedfair::cumulative_weights;
using fedfair::derive_seed;

TEST_CASE("same seed reproduces the sequence exactly") {
  RngStream a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ by id and by label") {
  const std::uint64_t s1 = derive_seed(7, StreamId::data, {0});
  const std::uint64_t s2 = derive_seed(7, StreamId::data, {1});
  const std::uint64_t s3 = derive_seed(7, StreamId::split, {0});
  const std::uint64_t s4 = derive_seed(8, StreamId::data, {0});
  CHECK(s1 != s2);
  CHECK(s1 != s3);
  CHECK(s1 != s4);
  CHECK(s2 != s3);
  // label list length matters too
  CHECK(derive_seed(7, StreamId::data) != derive_seed(7, StreamId::data, {0}));
}

TEST_CASE("uniform stays in [0,1) and open_uniform in (0,1)") {
  RngStream rng(9);
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.open_uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("normal moments") {
  RngStream rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  // SE(mean) ~ 1/sqrt(n) = 0.0022; SE(var) ~ sqrt(2/n) = 0.0032
  CHECK(std::fabs(mean) < 4.0 * 0.00224);
  CHECK(std::fabs(var - 1.0) < 4.0 * 0.0032);
}

TEST_CASE("laplace moments") {
  RngStream rng(13);
  const double b = 0.7;
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.laplace(b);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double target_var = 2.0 * b * b;  // 0.98
  // Var(X)=2b^2, E|X|^4=24b^4 so SE(var) ~ sqrt(20 b^4 / n) ~ 0.0049
  CHECK(std::fabs(mean) < 4.0 * std::sqrt(target_var / n));
  CHECK(std::fabs(var - target_var) < 4.0 * 0.0049);
}

TEST_CASE("uniform_int bounds and coverage") {
  RngStream rng(17);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform_int(7);
    REQUIRE(k >= 0);
    REQUIRE(k < 7);
    ++counts[static_cast<std::size_t>(k)];
  }
  for (const int c : counts) {
    // each bin ~ 10000, sd ~ sqrt(n * p(1-p)) ~ 92.6
    CHECK(std::fabs(c - 10000.0) < 6.0 * 92.6);
  }
}

TEST_CASE("shuffle is a permutation") {
  RngStream rng(19);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("sample_without_replacement: sorted, unique, in range") {
  RngStream rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<int> s = rng.sample_without_replacement(20, 7);
    REQUIRE(s.size() == 7);
    CHECK(std::is_sorted(s.begin(), s.end()));
    const std::set<int> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 7);
    CHECK(*s.begin() >= 0);
    CHECK(s.back() < 20);
  }
  // full draw enumerates everything
  const std::vector<int> all = rng.sample_without_replacement(5, 5);
  CHECK(all == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("discrete follows the weights") {
  RngStream rng(29);
  const std::vector<double> w{0.2, 0.0, 0.5, 0.3};
  const std::vector<double> cum = cumulative_weights(w);
  REQUIRE(cum.size() == 4);
  CHECK(cum.back() == doctest::Approx(1.0));
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int k = rng.discrete(cum, cum.back());
    REQUIRE(k >= 0);
    REQUIRE(k < 4);
    ++counts[static_cast<std::size_t>(k)];
  }
  CHECK(counts[1] == 0);  // zero-weight bin never drawn
  CHECK(std::fabs(counts[0] / double(n) - 0.2) < 0.006);
  CHECK(std::fabs(counts[2] / double(n) - 0.5) < 0.008);
  CHECK(std::fabs(counts[3] / double(n) - 0.3) < 0.007);
}

TEST_CASE("cumulative_weights rejects negatives") {
  CHECK_THROWS(cumulative_weights(std::vector<double>{0.5, -0.1}));
}

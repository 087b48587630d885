#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fedfair/rng.hpp"
#include "fedfair/summation.hpp"

using fedfair::ExactSum;
using fedfair::exact_mean;
using fedfair::exact_sum;

TEST_CASE("cancellation that defeats naive and compensated summation") {
  CHECK(exact_sum(std::vector<double>{1e100, 1.0, -1e100}) == 1.0);
  CHECK(exact_sum(std::vector<double>{1e16, 1.0, -1e16}) == 1.0);
  CHECK(exact_sum(std::vector<double>{1e308, -1e308, 1e308, -1e308}) == 0.0);
  // fsum's classic example: correctly rounded despite the spread.
  CHECK(exact_sum(std::vector<double>{1.0, 1e100, 1.0, -1e100}) == 2.0);
}

TEST_CASE("ten tenths round to exactly one") {
  std::vector<double> xs(10, 0.1);
  CHECK(exact_sum(xs) == 1.0);
}

TEST_CASE("value is bit-identical under permutations") {
  fedfair::RngStream rng(42);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) {
    const double mag = std::ldexp(rng.uniform() - 0.5, (i * 13) % 120 - 60);
    xs.push_back(mag);
  }
  const double reference = exact_sum(xs);
  std::vector<int> order(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) order[i] = static_cast<int>(i);
  for (int rep = 0; rep < 20; ++rep) {
    rng.shuffle(order);
    ExactSum s;
    for (const int i : order) s.add(xs[static_cast<std::size_t>(i)]);
    CHECK(s.value() == reference);
  }
}

TEST_CASE("incremental adds match span add") {
  const std::vector<double> xs{3.14, -2.71, 1e-30, 5e200, -5e200, 0.25};
  ExactSum a;
  for (const double x : xs) a.add(x);
  ExactSum b;
  b.add(xs);
  CHECK(a.value() == b.value());
}

TEST_CASE("non-finite inputs propagate") {
  const double inf = std::numeric_limits<double>::infinity();
  ExactSum s;
  s.add(1.0);
  s.add(inf);
  CHECK(s.value() == inf);
  s.add(-inf);
  CHECK(std::isnan(s.value()));

  ExactSum t;
  t.add(std::numeric_limits<double>::quiet_NaN());
  t.add(100.0);
  CHECK(std::isnan(t.value()));
}

TEST_CASE("reset clears state") {
  ExactSum s;
  s.add(5.0);
  s.add(std::numeric_limits<double>::infinity());
  s.reset();
  s.add(2.0);
  CHECK(s.value() == 2.0);
}

TEST_CASE("exact_mean") {
  CHECK(exact_mean(std::vector<double>{1.0, 2.0, 3.0, 4.0}) == 2.5);
  CHECK_THROWS_AS(exact_mean(std::vector<double>{}), std::invalid_argument);
}

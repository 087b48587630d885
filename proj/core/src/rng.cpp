#include "fedfair/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedfair {

std::uint64_t derive_seed(std::uint64_t master, StreamId id,
                          std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc908ULL);
  h = hash_chain(h, static_cast<std::uint64_t>(id));
  for (std::uint64_t v : labels) h = hash_chain(h, v);
  return h;
}

double RngStream::normal() {
  const double u = open_uniform();
  const double v = open_uniform();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * std::numbers::pi * v);
}

double RngStream::laplace(double scale) {
  const double p = open_uniform();
  return p < 0.5 ? scale * std::log(2.0 * p) : -scale * std::log(2.0 * (1.0 - p));
}

int RngStream::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  const auto un = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - un) % un;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = eng_();
    if (r >= threshold) return static_cast<int>(r % un);
  }
}

void RngStream::shuffle(std::span<int> v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + uniform_int(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

int RngStream::discrete(std::span<const double> cumulative, double total) {
  if (cumulative.empty() || !(total > 0.0))
    throw std::invalid_argument("discrete: empty or non-positive weight vector");
  const double target = uniform() * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  return static_cast<int>(std::min(idx, cumulative.size() - 1));
}

std::vector<double> cumulative_weights(std::span<const double> weights) {
  std::vector<double> cum(weights.size());
  double run = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("cumulative_weights: negative weight");
    run += weights[i];
    cum[i] = run;
  }
  return cum;
}

}  // namespace fedfair

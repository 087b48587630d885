#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace fedfair {

// SplitMix64 finalizer; used to derive independent stream seeds from
// (master seed, purpose, round, client, ...) label tuples.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t hash_chain(std::uint64_t h, std::uint64_t v) {
  return mix64(h + 0x9e3779b97f4a7c15ULL + v * 0xbf58476d1ce4e5b9ULL);
}

// Stream purposes; part of the derived seed so no two streams collide.
enum class StreamId : std::uint64_t {
  data = 1,
  split = 2,
  init = 3,
  client_sample = 4,
  sets = 5,
  dp_noise = 6,
  local = 7,
  mc = 8,
};

std::uint64_t derive_seed(std::uint64_t master, StreamId id,
                          std::initializer_list<std::uint64_t> labels = {});

// Deterministic random stream.  The engine is std::mt19937_64 (fully
// specified by the standard); all distribution transforms are implemented
// here so that draws do not depend on the standard library vendor.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static RngStream derive(std::uint64_t master, StreamId id,
                          std::initializer_list<std::uint64_t> labels = {}) {
    return RngStream(derive_seed(master, id, labels));
  }

  std::uint64_t next_u64() { return eng_(); }

  // 53-bit uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe as a log/inverse-CDF argument.
  double open_uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (two draws per call, no cached spare).
  double normal();

  // Zero-centred Laplace with the given scale.
  double laplace(double scale);

  // Unbiased integer in [0, n); rejection sampling.
  int uniform_int(int n);

  // Fisher-Yates shuffle.
  void shuffle(std::span<int> v);

  // k distinct values from {0, ..., n-1}, returned sorted.
  std::vector<int> sample_without_replacement(int n, int k);

  // Index sampled proportionally to weights[i]; weights need not sum to 1.
  int discrete(std::span<const double> cumulative, double total);

private:
  std::mt19937_64 eng_;
};

// Inclusive-scan of weights for RngStream::discrete.
std::vector<double> cumulative_weights(std::span<const double> weights);

}  // namespace fedfair

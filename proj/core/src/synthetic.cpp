#include "fedfair/synthetic.hpp"

#include "fedfair/errors.hpp"

namespace fedfair {

std::vector<ClientShard> generate_synthetic(const SyntheticSpec& spec,
                                            std::uint64_t seed) {
  if (spec.n_clients < 1) throw ValidationError("SyntheticSpec: n_clients must be >= 1");
  if (spec.samples_per_client < 1)
    throw ValidationError("SyntheticSpec: samples_per_client must be >= 1");
  if (spec.dim < 1) throw ValidationError("SyntheticSpec: dim must be >= 1");
  if (!(spec.heterogeneity >= 0.5) || !(spec.heterogeneity <= 1.0))
    throw ValidationError("SyntheticSpec: heterogeneity must be in [0.5, 1]");

  std::vector<ClientShard> shards;
  shards.reserve(static_cast<std::size_t>(spec.n_clients));
  const auto n = static_cast<std::size_t>(spec.samples_per_client);
  const auto d = static_cast<std::size_t>(spec.dim);

  for (int k = 0; k < spec.n_clients; ++k) {
    auto rng = RngStream::derive(seed, StreamId::data, {static_cast<std::uint64_t>(k)});
    std::vector<double> features(n * d);
    std::vector<std::uint8_t> labels(n), groups(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int a = rng.uniform() < 0.5 ? 0 : 1;
      const bool matched = rng.uniform() < spec.heterogeneity;
      const int a_eff = matched ? a : 1 - a;
      const double mu = (k + a_eff) % 2 == 0 ? 1.0 : -1.0;
      double sum = 0.0;
      double* x = features.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        x[j] = mu + rng.normal();
        sum += x[j];
      }
      labels[i] = sum > 0.0 ? 1 : 0;
      groups[i] = static_cast<std::uint8_t>(a);
    }
    ClientShard shard;
    shard.client_id = k;
    shard.weight = 1.0 / static_cast<double>(spec.n_clients);
    shard.data = TabularDataset(spec.dim, std::move(features), std::move(labels),
                                std::move(groups));
    shards.push_back(std::move(shard));
  }
  return shards;
}

}  // namespace fedfair

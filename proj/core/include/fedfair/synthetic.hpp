#pragma once

#include <cstdint>
#include <vector>

#include "fedfair/dataset.hpp"

namespace fedfair {

// Synthetic federation generator.  Client k draws the protected flag A
// uniformly; features follow a two-component Gaussian mixture whose means
// are the all-(+1) or all-(-1) vector selected by the parity of k + A, with
// identity covariance.  `heterogeneity` in [0.5, 1] is the weight on the
// parity-matched component: 1 gives fully client-coupled groups, 0.5 makes
// the two conditional feature laws identical.  Labels are the halfspace
// indicator 1[sum(x) > 0]; client weights are uniform.
struct SyntheticSpec {
  int n_clients = 10;
  int samples_per_client = 200;
  int dim = 10;
  double heterogeneity = 1.0;
};

std::vector<ClientShard> generate_synthetic(const SyntheticSpec& spec,
                                            std::uint64_t seed);

}  // namespace fedfair

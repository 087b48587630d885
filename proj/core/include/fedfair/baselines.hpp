#pragma once

#include "fedfair/federation.hpp"

namespace fedfair {

struct CentralizedConfig {
  int epochs = 1000;
  double step = 0.05;
  double step_decay = 1.0;  // multiplies the step after each epoch
  int eval_every = 1;       // 0 = final epoch only
  void validate() const;
};

// Full-gradient descent on the pooled training data with the regulariser
// evaluated on every matching row at the current parameters.  Reference
// point the federated runs are measured against.
RunResult train_centralized(const Federation& fed, Model init,
                            const FairnessSpec& spec, const KernelPtr& kernel,
                            double lambda, const CentralizedConfig& cfg);

// Federated training where each client regularises against its own
// minibatch only; no score sets cross the privacy boundary.
RunResult train_local_fair(const Federation& fed, Model init,
                           const FairnessSpec& spec, const KernelPtr& kernel,
                           const FedRunConfig& cfg);

}  // namespace fedfair

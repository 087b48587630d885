#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedfair/dataset.hpp"
#include "fedfair/dp.hpp"
#include "fedfair/fairness.hpp"
#include "fedfair/kernel.hpp"
#include "fedfair/model.hpp"

namespace fedfair {

// One client's private data inside a simulated federation.
struct ClientData {
  int client_id = 0;
  double weight = 0.0;  // normalised population weight
  TabularDataset train;
  TabularDataset test;
};

struct Federation {
  std::vector<ClientData> clients;
  int n_clients() const { return static_cast<int>(clients.size()); }
  int dim() const;
};

// Normalises shard weights and applies the per-client train/test split.
Federation make_federation(std::vector<ClientShard> shards, double test_fraction,
                           std::uint64_t seed);

struct FedRunConfig {
  int rounds = 100;
  int local_epochs = 50;       // full passes over the client's training split
  double local_step = 0.05;
  double step_decay = 1.0;     // multiplies the local step after each round
  double global_step = 1.0;
  int clients_per_round = 0;   // 0 selects every client
  double lambda = 0.0;
  int set_size = 100;          // broadcast scores per (group, conditioning set)
  int batch_size = 0;          // 0 uses the full training split per step
  bool weighted_aggregation = false;  // weight updates by client weight
  bool exhaustive_sets = false;       // broadcast every matching score instead of sampling
  int eval_every = 1;          // record metrics every k rounds; 0 = final round only
  int threads = 1;             // client updates run on this many workers
  std::uint64_t seed = 0;

  void validate(int n_clients) const;  // throws ConfigError naming the field
};

// Server-to-client payload: current parameters and score sets only.
struct ServerBroadcast {
  int round = 0;
  double local_step = 0.0;
  std::vector<double> theta;
  PredictionSets sets;
};

// Client-to-server payload: updated parameters and a diagnostic counter.
struct ClientUpdate {
  std::vector<double> theta;
  long empty_group_batches = 0;
};

// Client-to-server payload during setup: per-set group counts only.
struct GroupCountReport {
  int client_id = 0;
  long n_rows = 0;
  std::vector<std::array<long, 2>> counts;
};

GroupCountReport count_groups(const ClientData& client, const FairnessSpec& spec);

// Mixture correction weights from client count reports:
//   alpha[k][j][a] = (counts[k][j][a] / n_k) / sum_k' w_k' (counts[k'][j][a] / n_k').
// A (j, a) cell that is empty across the whole federation deactivates set j.
AlphaWeights compute_alpha(const Federation& fed, const FairnessSpec& spec);

// Broadcast score sets at the current parameters, built from training splits
// only.  Default: per (group, set), set_size draws with replacement, each
// picking a client proportionally to weight * within-client share and then a
// uniform matching row.  exhaustive_sets broadcasts every matching score
// once instead.
PredictionSets build_prediction_sets(const Federation& fed, const Model& model,
                                     const FairnessSpec& spec,
                                     const AlphaWeights& alpha,
                                     const FedRunConfig& cfg, int round);

enum class FedTrainer {
  tracked,  // fairness gradient against broadcast sets
  local,    // fairness gradient against the minibatch's own score sample
};

// E local epochs of minibatch SGD from the broadcast parameters; gradient is
// task + lambda * fairness.  Touches nothing but the client's own shard and
// the broadcast.
ClientUpdate local_update(const ClientData& client, const Model& prototype,
                          const ServerBroadcast& msg, const FairnessSpec& spec,
                          std::span<const std::array<double, 2>> alpha_k,
                          const KernelPtr& kernel, const FedRunConfig& cfg,
                          FedTrainer trainer);

// theta + global_step * weighted mean of (update - theta); uniform weights
// when none are given.  The single-client, unit-step case returns the update
// exactly.
std::vector<double> aggregate(std::span<const double> theta,
                              std::span<const ClientUpdate> updates,
                              double global_step,
                              std::span<const double> weights = {});

// Weight-correct pooled metrics on one side of the federation's split.
struct SplitMetrics {
  double task_loss = 0.0;
  double accuracy = 0.0;
  double sp = 0.0;
  double mmd2_total = 0.0;               // sum over evaluable sets
  double mmd_max = 0.0;                  // max_j sqrt(mmd2_j)
  std::vector<double> per_set_mmd2;      // NaN when a group is absent
};

SplitMetrics evaluate_split(const Federation& fed, bool test_split,
                            const Model& model, const FairnessSpec& spec,
                            const Kernel& kernel);

struct RoundRecord {
  int round = 0;
  std::string theta_id;        // hash of the parameter vector
  double local_step = 0.0;
  double lambda = 0.0;
  std::vector<int> sampled_clients;
  long empty_group_batches = 0;
  SplitMetrics train;
  SplitMetrics test;
  double objective_train = 0.0;  // task + lambda * mmd2, same split
  double objective_test = 0.0;
  double wall_ms = 0.0;          // excluded from serialised records
};

struct Diagnostics {
  long empty_group_batches = 0;
  std::vector<std::string> warnings;
};

struct RunResult {
  Model model;
  std::vector<RoundRecord> records;
  Diagnostics diagnostics;
};

// Federated training: per round, build and protect score sets (tracked
// trainer with lambda > 0), sample clients, run local updates, aggregate,
// and record metrics per eval_every.
RunResult run_federated(const Federation& fed, Model init, const FairnessSpec& spec,
                        const KernelPtr& kernel, const DPMechanism& dp,
                        const FedRunConfig& cfg, FedTrainer trainer);

std::string theta_fingerprint(std::span<const double> theta);

}  // namespace fedfair

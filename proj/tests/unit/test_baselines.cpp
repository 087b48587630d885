#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <string>
#include <vector>

#include "doctest.h"
#include "fedfair/baselines.hpp"
#include "fedfair/errors.hpp"
#include "fedfair/experiment.hpp"
#include "fedfair/synthetic.hpp"

using namespace fedfair;

namespace {

Federation one_client_federation(int n, int dim, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_clients = 1;
  spec.samples_per_client = n;
  spec.dim = dim;
  spec.heterogeneity = 0.8;
  return make_federation(generate_synthetic(spec, seed), 0.25, seed);
}

Model seeded_model(int dim, std::uint64_t seed) {
  Model m = Model::logistic(dim);
  RngStream rng = RngStream::derive(seed, StreamId::init);
  m.init_params(rng);
  return m;
}

void expect_config_error(const CentralizedConfig& cfg, const std::string& message) {
  try {
    cfg.validate();
    FAIL((std::string("expected ConfigError: ") + message));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == message);
  }
}

}  // namespace

TEST_CASE("centralized configuration names the offending field") {
  CentralizedConfig ok;
  ok.validate();

  CentralizedConfig c = ok;
  c.epochs = 0;
  expect_config_error(c, "centralized.epochs must be at least 1");
  c = ok;
  c.step = 0.0;
  expect_config_error(c, "centralized.step must be positive");
  c = ok;
  c.step_decay = 0.0;
  expect_config_error(c, "centralized.step_decay must be in (0, 1]");
  c = ok;
  c.step_decay = 2.0;
  expect_config_error(c, "centralized.step_decay must be in (0, 1]");
  c = ok;
  c.eval_every = -1;
  expect_config_error(c, "centralized.eval_every must be nonnegative");
}

TEST_CASE("one-client single-step federated training is centralized training") {
  // one client, one local epoch, full batches, exhaustive sets, unit server
  // step: every federated round collapses to one full-gradient step, so the
  // records must agree byte for byte.
  const Federation fed = one_client_federation(80, 3, 71);
  const Model init = seeded_model(3, 71);
  const FairnessSpec spec = FairnessSpec::make(Criterion::statistical_parity);
  const KernelPtr kernel = make_gaussian(1.0);
  const double lambda = 2.0;

  FedRunConfig fcfg;
  fcfg.rounds = 6;
  fcfg.local_epochs = 1;
  fcfg.local_step = 0.1;
  fcfg.step_decay = 0.9;
  fcfg.global_step = 1.0;
  fcfg.lambda = lambda;
  fcfg.batch_size = 0;
  fcfg.exhaustive_sets = true;
  fcfg.eval_every = 2;
  fcfg.seed = 71;
  RunResult federated = run_federated(fed, init, spec, kernel, DPMechanism{}, fcfg,
                                      FedTrainer::tracked);

  CentralizedConfig ccfg;
  ccfg.epochs = 6;
  ccfg.step = 0.1;
  ccfg.step_decay = 0.9;
  ccfg.eval_every = 2;
  RunResult central = train_centralized(fed, init, spec, kernel, lambda, ccfg);

  CHECK(records_jsonl(federated) == records_jsonl(central));
  CHECK(std::vector<double>(federated.model.theta().begin(), federated.model.theta().end()) ==
        std::vector<double>(central.model.theta().begin(), central.model.theta().end()));
}

TEST_CASE("one-client single-step self-regularised training matches the tracked run") {
  // with one client, one local epoch, and full batches, the minibatch score
  // sample is the broadcast set, so both trainers take identical steps
  const Federation fed = one_client_federation(60, 2, 73);
  const Model init = seeded_model(2, 73);
  const FairnessSpec spec = FairnessSpec::make(Criterion::equalized_odds);
  const KernelPtr kernel = make_gaussian(0.9);

  FedRunConfig cfg;
  cfg.rounds = 5;
  cfg.local_epochs = 1;
  cfg.local_step = 0.05;
  cfg.lambda = 1.5;
  cfg.batch_size = 0;
  cfg.exhaustive_sets = true;
  cfg.seed = 73;

  RunResult tracked = run_federated(fed, init, spec, kernel, DPMechanism{}, cfg,
                                    FedTrainer::tracked);
  RunResult self = train_local_fair(fed, init, spec, kernel, cfg);
  CHECK(records_jsonl(tracked) == records_jsonl(self));
  CHECK(std::vector<double>(tracked.model.theta().begin(), tracked.model.theta().end()) ==
        std::vector<double>(self.model.theta().begin(), self.model.theta().end()));
}

TEST_CASE("centralized training ignores client weights") {
  SyntheticSpec sspec;
  sspec.n_clients = 2;
  sspec.samples_per_client = 40;
  sspec.dim = 2;
  sspec.heterogeneity = 0.8;
  std::vector<ClientShard> shards = generate_synthetic(sspec, 79);
  std::vector<ClientShard> reweighted = shards;
  reweighted[0].weight = 4.0;
  reweighted[1].weight = 1.0;

  const Federation even = make_federation(shards, 0.25, 79);
  const Federation skewed = make_federation(reweighted, 0.25, 79);
  const Model init = seeded_model(2, 79);
  const FairnessSpec spec = FairnessSpec::make(Criterion::statistical_parity);
  const KernelPtr kernel = make_gaussian(1.0);

  CentralizedConfig cfg;
  cfg.epochs = 3;
  cfg.step = 0.05;
  RunResult a = train_centralized(even, init, spec, kernel, 0.5, cfg);
  RunResult b = train_centralized(skewed, init, spec, kernel, 0.5, cfg);
  CHECK(records_jsonl(a) == records_jsonl(b));
}

TEST_CASE("centralized records follow the evaluation cadence") {
  const Federation fed = one_client_federation(40, 2, 83);
  const Model init = seeded_model(2, 83);
  const FairnessSpec spec = FairnessSpec::make(Criterion::statistical_parity);
  CentralizedConfig cfg;
  cfg.epochs = 5;
  cfg.eval_every = 0;
  RunResult res = train_centralized(fed, init, spec, make_gaussian(1.0), 0.0, cfg);
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].round == 5);
  CHECK(res.records[0].sampled_clients == std::vector<int>{0});
  CHECK(res.records[0].empty_group_batches == 0);
}

TEST_CASE("self-regularised training differs from the tracked run with many clients") {
  // with several clients the broadcast sets see the whole federation while
  // the self-regularised trainer sees one shard; the trajectories part ways
  SyntheticSpec sspec;
  sspec.n_clients = 3;
  sspec.samples_per_client = 30;
  sspec.dim = 2;
  sspec.heterogeneity = 1.0;
  const Federation fed = make_federation(generate_synthetic(sspec, 89), 0.25, 89);
  const Model init = seeded_model(2, 89);
  const FairnessSpec spec = FairnessSpec::make(Criterion::statistical_parity);
  const KernelPtr kernel = make_gaussian(1.0);

  FedRunConfig cfg;
  cfg.rounds = 2;
  cfg.local_epochs = 2;
  cfg.lambda = 5.0;
  cfg.exhaustive_sets = true;
  cfg.seed = 89;
  RunResult tracked = run_federated(fed, init, spec, kernel, DPMechanism{}, cfg,
                                    FedTrainer::tracked);
  RunResult self = train_local_fair(fed, init, spec, kernel, cfg);
  CHECK(records_jsonl(tracked) != records_jsonl(self));
}

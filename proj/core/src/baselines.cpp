#include "fedfair/baselines.hpp"

#include <chrono>
#include <numeric>
#include <utility>

#include "fedfair/errors.hpp"

namespace fedfair {

void CentralizedConfig::validate() const {
  if (epochs < 1) throw ConfigError("centralized.epochs must be at least 1");
  if (!(step > 0.0)) throw ConfigError("centralized.step must be positive");
  if (!(step_decay > 0.0) || step_decay > 1.0)
    throw ConfigError("centralized.step_decay must be in (0, 1]");
  if (eval_every < 0) throw ConfigError("centralized.eval_every must be nonnegative");
}

RunResult train_centralized(const Federation& fed, Model init,
                            const FairnessSpec& spec, const KernelPtr& kernel,
                            double lambda, const CentralizedConfig& cfg) {
  cfg.validate();
  if (!kernel) throw ValidationError("train_centralized: a kernel is required");
  if (spec.n_sets() == 0)
    throw ValidationError("train_centralized: the fairness spec has no conditioning sets");
  if (fed.n_clients() == 0)
    throw ValidationError("train_centralized: the federation has no clients");
  if (!(lambda >= 0.0))
    throw ValidationError("train_centralized: lambda must be nonnegative");

  std::vector<TabularDataset> trains, tests;
  trains.reserve(fed.clients.size());
  tests.reserve(fed.clients.size());
  for (const ClientData& c : fed.clients) {
    trains.push_back(c.train);
    tests.push_back(c.test);
  }
  Federation pooled;
  pooled.clients.push_back(ClientData{0, 1.0, TabularDataset::concat(trains),
                                      TabularDataset::concat(tests)});
  const TabularDataset& train = pooled.clients[0].train;
  if (train.empty()) throw ValidationError("train_centralized: no training rows");
  if (init.input_dim() != train.dim())
    throw ValidationError("train_centralized: model input dimension does not match the data");

  RunResult res{std::move(init), {}, {}};
  Model& model = res.model;
  const std::size_t p = model.param_count();
  const std::size_t J = spec.n_sets();
  const bool fair = lambda > 0.0;

  std::vector<int> rows(static_cast<std::size_t>(train.size()));
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> g_task(p, 0.0), g_fair(p, 0.0);
  std::vector<std::array<double, 2>> ones(J, {1.0, 1.0});

  double step = cfg.step;
  bool warned = false;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double used_step = step;
    grad_task_loss(model, train, rows, g_task);
    if (fair) {
      PredictionSets sets;
      sets.round = epoch;
      sets.scores = collect_scores(model, train, rows, spec);
      sets.active.assign(J, 1);
      for (std::size_t j = 0; j < J; ++j) {
        if (sets.scores[j][0].empty() || sets.scores[j][1].empty()) {
          sets.active[j] = 0;
          if (!warned)
            res.diagnostics.warnings.push_back(
                "conditioning set " + spec.sets[j].name() +
                " has an empty protected group in the pooled data; excluded from the regulariser");
        }
      }
      warned = true;
      grad_fk(model, train, rows, spec, ones, sets, *kernel, g_fair);
    }
    apply_sgd_step(model.theta(), used_step, g_task, lambda, g_fair);
    step *= cfg.step_decay;

    const bool record =
        (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) || epoch == cfg.epochs;
    if (!record) continue;
    RoundRecord rec;
    rec.round = epoch;
    rec.theta_id = theta_fingerprint(model.theta());
    rec.local_step = used_step;
    rec.lambda = lambda;
    rec.sampled_clients = {0};
    rec.empty_group_batches = 0;
    rec.train = evaluate_split(pooled, false, model, spec, *kernel);
    rec.test = evaluate_split(pooled, true, model, spec, *kernel);
    rec.objective_train = rec.train.task_loss + lambda * rec.train.mmd2_total;
    rec.objective_test = rec.test.task_loss + lambda * rec.test.mmd2_total;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.records.push_back(std::move(rec));
  }
  return res;
}

RunResult train_local_fair(const Federation& fed, Model init,
                           const FairnessSpec& spec, const KernelPtr& kernel,
                           const FedRunConfig& cfg) {
  const DPMechanism none;
  return run_federated(fed, std::move(init), spec, kernel, none, cfg,
                       FedTrainer::local);
}

}  // namespace fedfair

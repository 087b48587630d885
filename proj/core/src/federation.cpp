#include "fedfair/federation.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>
#include <utility>

#include "fedfair/errors.hpp"
#include "fedfair/rng.hpp"
#include "fedfair/summation.hpp"

namespace fedfair {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t u64(long v) { return static_cast<std::uint64_t>(v); }

}  // namespace

int Federation::dim() const {
  return clients.empty() ? 0 : clients.front().train.dim();
}

Federation make_federation(std::vector<ClientShard> shards, double test_fraction,
                           std::uint64_t seed) {
  if (shards.empty())
    throw ValidationError("make_federation: at least one client shard is required");
  if (!(test_fraction >= 0.0) || test_fraction >= 1.0)
    throw ValidationError("make_federation: test_fraction must be in [0, 1)");
  ExactSum total;
  for (const ClientShard& s : shards) {
    if (!(s.weight > 0.0))
      throw ValidationError("make_federation: client weights must be positive");
    total.add(s.weight);
  }
  const double norm = total.value();
  Federation fed;
  fed.clients.reserve(shards.size());
  for (ClientShard& s : shards) {
    RngStream rng = RngStream::derive(seed, StreamId::split, {u64(s.client_id)});
    SplitResult split = train_test_split(s.data, test_fraction, rng);
    fed.clients.push_back(ClientData{s.client_id, s.weight / norm,
                                     std::move(split.train), std::move(split.test)});
  }
  return fed;
}

void FedRunConfig::validate(int n_clients) const {
  if (rounds < 1) throw ConfigError("fed.rounds must be at least 1");
  if (local_epochs < 1) throw ConfigError("fed.local_epochs must be at least 1");
  if (!(local_step > 0.0)) throw ConfigError("fed.local_step must be positive");
  if (!(step_decay > 0.0) || step_decay > 1.0)
    throw ConfigError("fed.step_decay must be in (0, 1]");
  if (!(global_step > 0.0)) throw ConfigError("fed.global_step must be positive");
  if (clients_per_round < 0 || clients_per_round > n_clients)
    throw ConfigError("fed.clients_per_round must be between 0 and the client count");
  if (!(lambda >= 0.0)) throw ConfigError("fed.lambda must be nonnegative");
  if (set_size < 1) throw ConfigError("fed.set_size must be at least 1");
  if (batch_size < 0) throw ConfigError("fed.batch_size must be nonnegative");
  if (eval_every < 0) throw ConfigError("fed.eval_every must be nonnegative");
  if (threads < 1) throw ConfigError("fed.threads must be at least 1");
}

GroupCountReport count_groups(const ClientData& client, const FairnessSpec& spec) {
  GroupCountReport rep;
  rep.client_id = client.client_id;
  rep.n_rows = client.train.size();
  rep.counts.assign(spec.n_sets(), {0, 0});
  const TabularDataset& ds = client.train;
  for (int i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    const int y = ds.label(i);
    const std::size_t a = static_cast<std::size_t>(ds.group(i));
    for (std::size_t j = 0; j < spec.n_sets(); ++j)
      if (spec.sets[j].contains(x, y)) ++rep.counts[j][a];
  }
  return rep;
}

AlphaWeights compute_alpha(const Federation& fed, const FairnessSpec& spec) {
  const std::size_t J = spec.n_sets();
  const std::size_t K = fed.clients.size();
  std::vector<GroupCountReport> reports;
  reports.reserve(K);
  for (const ClientData& c : fed.clients) reports.push_back(count_groups(c, spec));

  AlphaWeights out;
  out.alpha.assign(K, std::vector<std::array<double, 2>>(J, {0.0, 0.0}));
  out.global_counts.assign(J, {0, 0});
  out.active.assign(J, 1);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t a = 0; a < 2; ++a) {
      ExactSum denom_acc;
      for (std::size_t k = 0; k < K; ++k) {
        const GroupCountReport& r = reports[k];
        const double share =
            r.n_rows > 0 ? static_cast<double>(r.counts[j][a]) / static_cast<double>(r.n_rows)
                         : 0.0;
        denom_acc.add(fed.clients[k].weight * share);
        out.global_counts[j][a] += r.counts[j][a];
      }
      const double denom = denom_acc.value();
      if (!(denom > 0.0)) {
        out.active[j] = 0;
        continue;
      }
      for (std::size_t k = 0; k < K; ++k) {
        const GroupCountReport& r = reports[k];
        if (r.n_rows == 0 || r.counts[j][a] == 0) continue;
        const double share =
            static_cast<double>(r.counts[j][a]) / static_cast<double>(r.n_rows);
        out.alpha[k][j][a] = share / denom;
      }
    }
  }
  return out;
}

PredictionSets build_prediction_sets(const Federation& fed, const Model& model,
                                     const FairnessSpec& spec,
                                     const AlphaWeights& alpha,
                                     const FedRunConfig& cfg, int round) {
  const std::size_t J = spec.n_sets();
  const std::size_t K = fed.clients.size();
  PredictionSets out;
  out.round = round;
  out.scores.assign(J, {});
  out.active = alpha.active;
  if (out.active.size() != J)
    throw ValidationError("build_prediction_sets: alpha does not match the fairness spec");

  // Matching row indices per (client, set, group).
  std::vector<std::vector<std::array<std::vector<int>, 2>>> match(
      K, std::vector<std::array<std::vector<int>, 2>>(J));
  for (std::size_t k = 0; k < K; ++k) {
    const TabularDataset& ds = fed.clients[k].train;
    for (int i = 0; i < ds.size(); ++i) {
      const auto x = ds.row(i);
      const int y = ds.label(i);
      const std::size_t a = static_cast<std::size_t>(ds.group(i));
      for (std::size_t j = 0; j < J; ++j)
        if (spec.sets[j].contains(x, y)) match[k][j][a].push_back(i);
    }
  }

  for (std::size_t j = 0; j < J; ++j) {
    if (!out.active[j]) continue;
    for (std::size_t a = 0; a < 2; ++a) {
      std::vector<double>& dest = out.scores[j][a];
      if (cfg.exhaustive_sets) {
        for (std::size_t k = 0; k < K; ++k) {
          const TabularDataset& ds = fed.clients[k].train;
          for (int i : match[k][j][a])
            dest.push_back(score_value(model, spec.score, ds.row(i), ds.label(i)));
        }
      } else {
        std::vector<double> w(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
          const int nk = fed.clients[k].train.size();
          if (nk > 0)
            w[k] = fed.clients[k].weight *
                   (static_cast<double>(match[k][j][a].size()) / nk);
        }
        const std::vector<double> cum = cumulative_weights(w);
        const double total = cum.back();
        if (!(total > 0.0)) {
          out.active[j] = 0;
          out.scores[j][0].clear();
          out.scores[j][1].clear();
          break;
        }
        RngStream rng =
            RngStream::derive(cfg.seed, StreamId::sets, {u64(round), j, a});
        dest.reserve(static_cast<std::size_t>(cfg.set_size));
        for (int t = 0; t < cfg.set_size; ++t) {
          const int k = rng.discrete(cum, total);
          const std::vector<int>& rows = match[static_cast<std::size_t>(k)][j][a];
          const int i = rows[static_cast<std::size_t>(
              rng.uniform_int(static_cast<int>(rows.size())))];
          const TabularDataset& ds = fed.clients[static_cast<std::size_t>(k)].train;
          dest.push_back(score_value(model, spec.score, ds.row(i), ds.label(i)));
        }
      }
      std::sort(dest.begin(), dest.end());
    }
  }
  return out;
}

ClientUpdate local_update(const ClientData& client, const Model& prototype,
                          const ServerBroadcast& msg, const FairnessSpec& spec,
                          std::span<const std::array<double, 2>> alpha_k,
                          const KernelPtr& kernel, const FedRunConfig& cfg,
                          FedTrainer trainer) {
  ClientUpdate up;
  const TabularDataset& train = client.train;
  const int n = train.size();
  if (n == 0) {  // nothing to learn from; echo the broadcast
    up.theta = msg.theta;
    return up;
  }
  Model model = prototype;
  model.set_theta(msg.theta);
  const std::span<double> theta = model.theta();
  const std::size_t p = model.param_count();
  const std::size_t J = spec.n_sets();
  const bool fair = cfg.lambda > 0.0;

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  int batch = cfg.batch_size;
  if (batch <= 0 || batch > n) batch = n;

  std::vector<double> g_task(p, 0.0);
  std::vector<double> g_fair(p, 0.0);
  std::vector<std::array<double, 2>> ones;
  if (fair && trainer == FedTrainer::local) ones.assign(J, {1.0, 1.0});

  RngStream rng = RngStream::derive(cfg.seed, StreamId::local,
                                    {u64(msg.round), u64(client.client_id)});
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    rng.shuffle(idx);
    for (int start = 0; start < n; start += batch) {
      const int len = std::min(batch, n - start);
      const std::span<const int> rows(idx.data() + start,
                                      static_cast<std::size_t>(len));
      grad_task_loss(model, train, rows, g_task);
      if (fair) {
        if (trainer == FedTrainer::tracked) {
          const FairnessGradStats stats =
              grad_fk(model, train, rows, spec, alpha_k, msg.sets, *kernel, g_fair);
          up.empty_group_batches += stats.empty_subgroup_terms;
        } else {
          PredictionSets local_sets;
          local_sets.round = msg.round;
          local_sets.scores = collect_scores(model, train, rows, spec);
          local_sets.active.assign(J, 1);
          for (std::size_t j = 0; j < J; ++j) {
            if (local_sets.scores[j][0].empty() || local_sets.scores[j][1].empty()) {
              local_sets.active[j] = 0;
              ++up.empty_group_batches;
            }
          }
          grad_fk(model, train, rows, spec, ones, local_sets, *kernel, g_fair);
        }
      }
      apply_sgd_step(theta, msg.local_step, g_task, cfg.lambda, g_fair);
    }
  }
  up.theta.assign(theta.begin(), theta.end());
  return up;
}

std::vector<double> aggregate(std::span<const double> theta,
                              std::span<const ClientUpdate> updates,
                              double global_step,
                              std::span<const double> weights) {
  if (updates.empty())
    throw ValidationError("aggregate: at least one client update is required");
  const std::size_t p = theta.size();
  for (const ClientUpdate& u : updates)
    if (u.theta.size() != p)
      throw ValidationError("aggregate: update size does not match the parameters");
  if (!weights.empty() && weights.size() != updates.size())
    throw ValidationError("aggregate: weights do not match the updates");
  // One client at unit step replaces the parameters outright.
  if (updates.size() == 1 && global_step == 1.0) return updates[0].theta;

  std::vector<double> out(p, 0.0);
  const double inv = 1.0 / static_cast<double>(updates.size());
  for (std::size_t c = 0; c < p; ++c) {
    ExactSum acc;
    for (std::size_t i = 0; i < updates.size(); ++i) {
      const double d = updates[i].theta[c] - theta[c];
      acc.add(weights.empty() ? d : weights[i] * d);
    }
    const double delta = weights.empty() ? acc.value() * inv : acc.value();
    out[c] = theta[c] + global_step * delta;
  }
  return out;
}

SplitMetrics evaluate_split(const Federation& fed, bool test_split,
                            const Model& model, const FairnessSpec& spec,
                            const Kernel& kernel) {
  const std::size_t J = spec.n_sets();
  SplitMetrics m;
  m.per_set_mmd2.assign(J, kNaN);

  // Normalising mass per (set, group) under the client mixture.
  std::vector<std::array<ExactSum, 2>> mass_acc(J);
  for (const ClientData& c : fed.clients) {
    const TabularDataset& ds = test_split ? c.test : c.train;
    const int n = ds.size();
    if (n == 0) continue;
    std::vector<std::array<long, 2>> counts(J, {0, 0});
    for (int i = 0; i < n; ++i) {
      const auto x = ds.row(i);
      const int y = ds.label(i);
      const std::size_t a = static_cast<std::size_t>(ds.group(i));
      for (std::size_t j = 0; j < J; ++j)
        if (spec.sets[j].contains(x, y)) ++counts[j][a];
    }
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t a = 0; a < 2; ++a)
        mass_acc[j][a].add(c.weight * (static_cast<double>(counts[j][a]) / n));
  }
  std::vector<std::array<double, 2>> mass(J);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t a = 0; a < 2; ++a) mass[j][a] = mass_acc[j][a].value();

  ExactSum loss_acc, acc_acc, wsum;
  std::array<ExactSum, 2> pos_acc, grp_acc;
  std::vector<std::array<std::vector<double>, 2>> vals(J), wts(J);

  for (const ClientData& c : fed.clients) {
    const TabularDataset& ds = test_split ? c.test : c.train;
    const int n = ds.size();
    if (n == 0) continue;
    ExactSum closs;
    long correct = 0;
    std::array<long, 2> cpos = {0, 0}, cgrp = {0, 0};
    for (int i = 0; i < n; ++i) {
      const auto x = ds.row(i);
      const int y = ds.label(i);
      const std::size_t a = static_cast<std::size_t>(ds.group(i));
      const double h = model.predict(x);
      closs.add(Model::sample_loss(h, y));
      const int pred = h >= 0.5 ? 1 : 0;
      if (pred == y) ++correct;
      ++cgrp[a];
      cpos[a] += pred;
      for (std::size_t j = 0; j < J; ++j) {
        if (!spec.sets[j].contains(x, y)) continue;
        if (!(mass[j][0] > 0.0 && mass[j][1] > 0.0)) continue;
        const double s =
            spec.score == ScoreKind::prediction ? h : Model::sample_loss(h, y);
        vals[j][a].push_back(s);
        wts[j][a].push_back((c.weight / n) / mass[j][a]);
      }
    }
    loss_acc.add(c.weight * (closs.value() / n));
    acc_acc.add(c.weight * (static_cast<double>(correct) / n));
    wsum.add(c.weight);
    for (std::size_t a = 0; a < 2; ++a) {
      pos_acc[a].add(c.weight * (static_cast<double>(cpos[a]) / n));
      grp_acc[a].add(c.weight * (static_cast<double>(cgrp[a]) / n));
    }
  }

  const double w = wsum.value();
  if (!(w > 0.0)) {
    m.task_loss = m.accuracy = m.sp = m.mmd2_total = m.mmd_max = kNaN;
    return m;
  }
  m.task_loss = loss_acc.value() / w;
  m.accuracy = acc_acc.value() / w;
  const double g0 = grp_acc[0].value(), g1 = grp_acc[1].value();
  m.sp = (g0 > 0.0 && g1 > 0.0)
             ? std::fabs(pos_acc[0].value() / g0 - pos_acc[1].value() / g1)
             : kNaN;

  ExactSum mmd2_sum;
  bool any_set = false;
  double mmd_max = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (!(mass[j][0] > 0.0 && mass[j][1] > 0.0)) continue;
    const double d2 = weighted_mmd_squared(vals[j][0], wts[j][0], vals[j][1],
                                           wts[j][1], kernel);
    m.per_set_mmd2[j] = d2;
    mmd2_sum.add(d2);
    mmd_max = std::max(mmd_max, std::sqrt(std::max(0.0, d2)));
    any_set = true;
  }
  m.mmd2_total = any_set ? mmd2_sum.value() : kNaN;
  m.mmd_max = any_set ? mmd_max : kNaN;
  return m;
}

std::string theta_fingerprint(std::span<const double> theta) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  for (const double v : theta) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i)
    out[static_cast<std::size_t>(i)] = kHex[(h >> (60 - 4 * i)) & 0xfULL];
  return out;
}

RunResult run_federated(const Federation& fed, Model init, const FairnessSpec& spec,
                        const KernelPtr& kernel, const DPMechanism& dp,
                        const FedRunConfig& cfg, FedTrainer trainer) {
  const int K = fed.n_clients();
  if (K == 0) throw ValidationError("run_federated: the federation has no clients");
  cfg.validate(K);
  dp.validate();
  if (!kernel) throw ValidationError("run_federated: a kernel is required");
  if (spec.n_sets() == 0)
    throw ValidationError("run_federated: the fairness spec has no conditioning sets");
  if (init.input_dim() != fed.dim())
    throw ValidationError("run_federated: model input dimension does not match the data");

  const bool fair = cfg.lambda > 0.0;
  const bool tracked = trainer == FedTrainer::tracked;
  RunResult res{std::move(init), {}, {}};
  Model& model = res.model;

  AlphaWeights alpha;
  if (fair && tracked) {
    alpha = compute_alpha(fed, spec);
    for (std::size_t j = 0; j < spec.n_sets(); ++j)
      if (!alpha.active[j])
        res.diagnostics.warnings.push_back(
            "conditioning set " + spec.sets[j].name() +
            " has an empty protected group federation-wide; excluded from the regulariser");
  }
  if (dp.active() && !(fair && tracked))
    res.diagnostics.warnings.push_back(
        "score noise is configured but no score sets are broadcast; mechanism unused");

  const int S = cfg.clients_per_round == 0 ? K : cfg.clients_per_round;
  double step = cfg.local_step;

  for (int round = 1; round <= cfg.rounds; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    ServerBroadcast msg;
    msg.round = round;
    msg.local_step = step;
    msg.theta.assign(model.theta().begin(), model.theta().end());
    if (fair && tracked) {
      msg.sets = build_prediction_sets(fed, model, spec, alpha, cfg, round);
      if (dp.active())
        msg.sets = protect(msg.sets, dp,
                           derive_seed(cfg.seed, StreamId::dp_noise, {u64(round)}));
    }

    RngStream crng = RngStream::derive(cfg.seed, StreamId::client_sample, {u64(round)});
    const std::vector<int> ids = crng.sample_without_replacement(K, S);

    std::vector<ClientUpdate> updates(ids.size());
    auto work = [&](std::size_t slot) {
      const std::size_t k = static_cast<std::size_t>(ids[slot]);
      std::span<const std::array<double, 2>> ak;
      if (fair && tracked) ak = alpha.alpha[k];
      updates[slot] =
          local_update(fed.clients[k], model, msg, spec, ak, kernel, cfg, trainer);
    };
    if (cfg.threads > 1 && ids.size() > 1) {
      std::atomic<std::size_t> cursor{0};
      std::exception_ptr error;
      std::mutex error_mu;
      auto runner = [&] {
        for (;;) {
          const std::size_t slot = cursor.fetch_add(1);
          if (slot >= ids.size()) return;
          try {
            work(slot);
          } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      };
      const std::size_t nt =
          std::min(static_cast<std::size_t>(cfg.threads), ids.size());
      std::vector<std::thread> pool;
      pool.reserve(nt);
      for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(runner);
      for (std::thread& t : pool) t.join();
      if (error) std::rethrow_exception(error);
    } else {
      for (std::size_t slot = 0; slot < ids.size(); ++slot) work(slot);
    }

    long round_empties = 0;
    for (const ClientUpdate& u : updates) round_empties += u.empty_group_batches;
    res.diagnostics.empty_group_batches += round_empties;

    std::vector<double> agg_w;
    if (cfg.weighted_aggregation) {
      ExactSum tw;
      for (const int id : ids) tw.add(fed.clients[static_cast<std::size_t>(id)].weight);
      const double total = tw.value();
      agg_w.reserve(ids.size());
      for (const int id : ids)
        agg_w.push_back(fed.clients[static_cast<std::size_t>(id)].weight / total);
    }
    model.set_theta(aggregate(model.theta(), updates, cfg.global_step, agg_w));
    step *= cfg.step_decay;

    const bool record =
        (cfg.eval_every > 0 && round % cfg.eval_every == 0) || round == cfg.rounds;
    if (!record) continue;
    RoundRecord rec;
    rec.round = round;
    rec.theta_id = theta_fingerprint(model.theta());
    rec.local_step = msg.local_step;
    rec.lambda = cfg.lambda;
    rec.sampled_clients = ids;
    rec.empty_group_batches = round_empties;
    rec.train = evaluate_split(fed, false, model, spec, *kernel);
    rec.test = evaluate_split(fed, true, model, spec, *kernel);
    rec.objective_train = rec.train.task_loss + cfg.lambda * rec.train.mmd2_total;
    rec.objective_test = rec.test.task_loss + cfg.lambda * rec.test.mmd2_total;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.records.push_back(std::move(rec));
  }
  return res;
}

}  // namespace fedfair

#include "fedfair/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "fedfair/errors.hpp"
#include "fedfair/rng.hpp"
#include "fedfair/summation.hpp"
#include "nlohmann/json.hpp"

namespace fedfair {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<ClientShard> build_shards(const RunSpec& spec) {
  if (spec.data == DataKind::synthetic)
    return generate_synthetic(spec.synthetic, spec.seed);
  CsvLoadResult loaded = load_csv(spec.csv);
  if (spec.csv.partition_col) {
    PartitionResult parts =
        partition_by_column(loaded.data, loaded.partition_keys, spec.min_shard_size);
    return std::move(parts.shards);
  }
  std::vector<ClientShard> shards;
  shards.push_back(ClientShard{0, 1.0, std::move(loaded.data)});
  return shards;
}

ordered_json split_json(const SplitMetrics& m) {
  ordered_json out;
  out["task_loss"] = m.task_loss;
  out["accuracy"] = m.accuracy;
  out["sp"] = m.sp;
  out["mmd2"] = m.mmd2_total;
  out["mmd"] = m.mmd_max;
  out["per_set_mmd2"] = m.per_set_mmd2;
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file " + path);
  out << content;
  if (!out) throw ValidationError("failed writing file " + path);
}

double effective_step(const RunSpec& spec) {
  if (spec.trainer == TrainerKind::centralized) return spec.centralized.step;
  return spec.fed.local_epochs * spec.fed.local_step * spec.fed.global_step;
}

void run_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& work) {
  if (workers > 1 && n > 1) {
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto runner = [&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        try {
          work(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    };
    const std::size_t nt = std::min(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(runner);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t i = 0; i < n; ++i) work(i);
  }
}

}  // namespace

Federation build_federation(const RunSpec& spec) {
  Federation fed = make_federation(build_shards(spec), spec.test_fraction, spec.seed);
  if (!spec.standardize) return fed;
  std::vector<const TabularDataset*> parts;
  parts.reserve(fed.clients.size());
  for (const ClientData& c : fed.clients) parts.push_back(&c.train);
  const Standardizer stats = fit_standardizer(parts);
  for (ClientData& c : fed.clients) {
    c.train = c.train.transformed(stats.mean, stats.inv_std);
    c.test = c.test.transformed(stats.mean, stats.inv_std);
  }
  return fed;
}

RunOutput execute_run(const RunSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Federation fed = build_federation(spec);

  Model model = spec.build_model(fed.dim());
  RngStream init_rng = RngStream::derive(spec.seed, StreamId::init);
  model.init_params(init_rng);

  const FairnessSpec fairness = spec.fairness_spec();
  const KernelPtr kernel = spec.build_kernel();
  FedRunConfig fc = spec.fed;
  fc.seed = spec.seed;

  RunOutput out;
  out.spec = spec;
  out.config_id = config_hash(spec);
  switch (spec.trainer) {
    case TrainerKind::algorithm1:
    case TrainerKind::algorithm2:
      out.result = run_federated(fed, std::move(model), fairness, kernel, spec.dp,
                                 fc, FedTrainer::tracked);
      break;
    case TrainerKind::local_fair:
      out.result = train_local_fair(fed, std::move(model), fairness, kernel, fc);
      break;
    case TrainerKind::centralized:
      out.result = train_centralized(fed, std::move(model), fairness, kernel,
                                     fc.lambda, spec.centralized);
      break;
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string records_jsonl(const RunResult& result) {
  std::string out;
  for (const RoundRecord& r : result.records) {
    ordered_json rec;
    rec["round"] = r.round;
    rec["theta_id"] = r.theta_id;
    rec["local_step"] = r.local_step;
    rec["lambda"] = r.lambda;
    rec["sampled_clients"] = r.sampled_clients;
    rec["empty_group_batches"] = r.empty_group_batches;
    rec["train"] = split_json(r.train);
    rec["test"] = split_json(r.test);
    rec["objective_train"] = r.objective_train;
    rec["objective_test"] = r.objective_test;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string write_run_outputs(const RunOutput& out, const std::string& out_root) {
  const fs::path dir =
      fs::path(out_root) / (out.config_id + "-s" + std::to_string(out.spec.seed));
  fs::create_directories(dir);

  write_text_file((dir / "records.jsonl").string(), records_jsonl(out.result));
  write_text_file((dir / "resolved_config.json").string(), resolved_json(out.spec));
  out.result.model.save_file((dir / "model.bin").string());

  std::ostringstream csv;
  csv << "config_id,seed,trainer,criterion,kernel,lambda,rounds,effective_step,"
         "train_loss,train_acc,train_sp,train_mmd2,"
         "test_loss,test_acc,test_sp,test_mmd2,"
         "objective_train,objective_test,empty_group_batches,wall_seconds\n";
  const RoundRecord& last = out.result.records.back();
  csv << out.config_id << ',' << out.spec.seed << ','
      << trainer_to_string(out.spec.trainer) << ','
      << criterion_to_string(out.spec.criterion) << ','
      << kernel_kind_to_string(out.spec.kernel) << ','
      << format_double(out.spec.fed.lambda) << ',' << last.round << ','
      << format_double(effective_step(out.spec)) << ','
      << format_double(last.train.task_loss) << ','
      << format_double(last.train.accuracy) << ',' << format_double(last.train.sp)
      << ',' << format_double(last.train.mmd2_total) << ','
      << format_double(last.test.task_loss) << ','
      << format_double(last.test.accuracy) << ',' << format_double(last.test.sp)
      << ',' << format_double(last.test.mmd2_total) << ','
      << format_double(last.objective_train) << ','
      << format_double(last.objective_test) << ','
      << out.result.diagnostics.empty_group_batches << ','
      << format_double(out.wall_seconds) << '\n';
  write_text_file((dir / "summary.csv").string(), csv.str());

  if (!out.result.diagnostics.warnings.empty()) {
    std::string text;
    for (const std::string& w : out.result.diagnostics.warnings) {
      text += w;
      text += '\n';
    }
    write_text_file((dir / "warnings.txt").string(), text);
  }
  return dir.string();
}

std::vector<SweepCell> run_grid(const RunSpec& base, std::span<const double> lambdas,
                                std::span<const std::uint64_t> seeds, int workers) {
  if (lambdas.empty()) throw ValidationError("run_grid: at least one lambda is required");
  if (seeds.empty()) throw ValidationError("run_grid: at least one seed is required");
  std::vector<SweepCell> cells(lambdas.size() * seeds.size());
  run_indexed(cells.size(), workers, [&](std::size_t i) {
    const std::size_t li = i / seeds.size();
    const std::size_t si = i % seeds.size();
    RunSpec spec = base;
    spec.fed.lambda = lambdas[li];
    spec.seed = seeds[si];
    RunOutput out = execute_run(spec);
    SweepCell& cell = cells[i];
    cell.lambda = lambdas[li];
    cell.seed = seeds[si];
    cell.config_id = out.config_id;
    cell.wall_seconds = out.wall_seconds;
    cell.records = std::move(out.result.records);
  });
  return cells;
}

MeanSE mean_se(std::span<const double> xs) {
  MeanSE out;
  if (xs.empty()) return out;
  out.mean = exact_mean(xs);
  if (xs.size() < 2) return out;
  ExactSum sq;
  for (const double x : xs) {
    const double d = x - out.mean;
    sq.add(d * d);
  }
  const double var = sq.value() / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

std::vector<SweepRow> aggregate_sweep(std::span<const SweepCell> cells) {
  std::vector<double> lambdas;
  for (const SweepCell& c : cells)
    if (std::find(lambdas.begin(), lambdas.end(), c.lambda) == lambdas.end())
      lambdas.push_back(c.lambda);

  std::vector<SweepRow> rows;
  rows.reserve(lambdas.size());
  for (const double lambda : lambdas) {
    std::vector<double> acc, sp, mmd2, loss, obj;
    for (const SweepCell& c : cells) {
      if (c.lambda != lambda) continue;
      const RoundRecord& last = c.final_record();
      acc.push_back(last.test.accuracy);
      sp.push_back(last.test.sp);
      mmd2.push_back(last.test.mmd2_total);
      loss.push_back(last.test.task_loss);
      obj.push_back(last.objective_train);
    }
    SweepRow row;
    row.lambda = lambda;
    row.n = static_cast<int>(acc.size());
    const MeanSE a = mean_se(acc), s = mean_se(sp), m = mean_se(mmd2),
                 l = mean_se(loss);
    row.acc_mean = a.mean;
    row.acc_se = a.se;
    row.sp_mean = s.mean;
    row.sp_se = s.se;
    row.mmd2_mean = m.mean;
    row.mmd2_se = m.se;
    row.loss_mean = l.mean;
    row.loss_se = l.se;
    row.train_objective_mean = mean_se(obj).mean;
    rows.push_back(row);
  }
  return rows;
}

std::string write_sweep_outputs(std::span<const SweepCell> cells,
                                std::span<const SweepRow> rows,
                                const std::string& dir) {
  fs::create_directories(dir);

  std::ostringstream runs;
  runs << "lambda,seed,config_id,rounds,test_acc,test_sp,test_mmd2,test_loss,"
          "objective_train,wall_seconds\n";
  for (const SweepCell& c : cells) {
    const RoundRecord& last = c.final_record();
    runs << format_double(c.lambda) << ',' << c.seed << ',' << c.config_id << ','
         << last.round << ',' << format_double(last.test.accuracy) << ','
         << format_double(last.test.sp) << ','
         << format_double(last.test.mmd2_total) << ','
         << format_double(last.test.task_loss) << ','
         << format_double(last.objective_train) << ','
         << format_double(c.wall_seconds) << '\n';
  }
  write_text_file((fs::path(dir) / "runs.csv").string(), runs.str());

  std::ostringstream summary;
  summary << "lambda,n,acc_mean,acc_se,sp_mean,sp_se,mmd2_mean,mmd2_se,"
             "loss_mean,loss_se,train_objective_mean\n";
  auto emit_row = [&](std::ostringstream& os, const SweepRow& r) {
    os << format_double(r.lambda) << ',' << r.n << ',' << format_double(r.acc_mean)
       << ',' << format_double(r.acc_se) << ',' << format_double(r.sp_mean) << ','
       << format_double(r.sp_se) << ',' << format_double(r.mmd2_mean) << ','
       << format_double(r.mmd2_se) << ',' << format_double(r.loss_mean) << ','
       << format_double(r.loss_se) << ','
       << format_double(r.train_objective_mean) << '\n';
  };
  for (const SweepRow& r : rows) emit_row(summary, r);
  write_text_file((fs::path(dir) / "sweep_summary.csv").string(), summary.str());

  // Rows no other row beats on both axes (higher accuracy, lower disparity).
  std::ostringstream pareto;
  pareto << "lambda,n,acc_mean,acc_se,sp_mean,sp_se,mmd2_mean,mmd2_se,"
            "loss_mean,loss_se,train_objective_mean\n";
  std::vector<SweepRow> front;
  for (const SweepRow& r : rows) {
    bool dominated = false;
    for (const SweepRow& o : rows) {
      if (o.acc_mean >= r.acc_mean && o.sp_mean <= r.sp_mean &&
          (o.acc_mean > r.acc_mean || o.sp_mean < r.sp_mean)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(r);
  }
  std::sort(front.begin(), front.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.sp_mean < b.sp_mean; });
  for (const SweepRow& r : front) emit_row(pareto, r);
  write_text_file((fs::path(dir) / "pareto.csv").string(), pareto.str());
  return dir;
}

void write_convergence_csv(std::span<const RoundRecord> records,
                           const std::string& path) {
  std::ostringstream os;
  os << "round,train_ce,train_mmd,test_ce,test_mmd,objective_train,objective_test,"
        "train_acc,test_acc,train_sp,test_sp,step\n";
  for (const RoundRecord& r : records) {
    os << r.round << ',' << format_double(r.train.task_loss) << ','
       << format_double(r.train.mmd2_total) << ','
       << format_double(r.test.task_loss) << ','
       << format_double(r.test.mmd2_total) << ','
       << format_double(r.objective_train) << ','
       << format_double(r.objective_test) << ','
       << format_double(r.train.accuracy) << ','
       << format_double(r.test.accuracy) << ',' << format_double(r.train.sp) << ','
       << format_double(r.test.sp) << ',' << format_double(r.local_step) << '\n';
  }
  write_text_file(path, os.str());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > 0.0))
    throw ValidationError("log_grid: endpoints must be positive");
  if (n < 1) throw ValidationError("log_grid: at least one point is required");
  if (n == 1) return {lo};
  if (!(hi > lo)) throw ValidationError("log_grid: hi must exceed lo");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out.push_back(std::exp(llo + (lhi - llo) * i / (n - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number \"" + item + "\"");
    }
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos])))
      ++pos;
    if (pos != item.size()) throw ConfigError("cannot parse number \"" + item + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list of numbers");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::uint64_t v = 0;
    const char* begin = item.data();
    const char* end = item.data() + item.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
      throw ConfigError("cannot parse seed \"" + item + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list of seeds");
  return out;
}

}  // namespace fedfair

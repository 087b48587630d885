#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedfair/config.hpp"

namespace fedfair {

struct RunOutput {
  RunSpec spec;
  std::string config_id;
  RunResult result;
  double wall_seconds = 0.0;
};

// Builds the federation exactly as execute_run does: data source, optional
// z-scoring fit on the pooled training rows, per-client split.
Federation build_federation(const RunSpec& spec);

RunOutput execute_run(const RunSpec& spec);

// Byte-stable serialisation of the round records, one JSON object per line.
// Contains no timings, so reruns reproduce it exactly.
std::string records_jsonl(const RunResult& result);

// Writes records.jsonl, summary.csv, model.bin, resolved_config.json (and
// warnings.txt when any) under <out_root>/<config_id>-s<seed>; returns the
// directory path.
std::string write_run_outputs(const RunOutput& out, const std::string& out_root);

struct SweepCell {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string config_id;
  double wall_seconds = 0.0;
  std::vector<RoundRecord> records;
  const RoundRecord& final_record() const { return records.back(); }
};

// Cartesian (lambda, seed) grid on `workers` threads.  Cell order is
// lambdas x seeds and every cell is independent of the scheduling.
std::vector<SweepCell> run_grid(const RunSpec& base, std::span<const double> lambdas,
                                std::span<const std::uint64_t> seeds, int workers);

struct SweepRow {
  double lambda = 0.0;
  int n = 0;  // seeds aggregated
  double acc_mean = 0.0, acc_se = 0.0;
  double sp_mean = 0.0, sp_se = 0.0;
  double mmd2_mean = 0.0, mmd2_se = 0.0;
  double loss_mean = 0.0, loss_se = 0.0;
  double train_objective_mean = 0.0;
};

// Final-round test metrics aggregated per lambda (mean and standard error).
std::vector<SweepRow> aggregate_sweep(std::span<const SweepCell> cells);

// runs.csv, sweep_summary.csv, pareto.csv under dir; returns dir.
std::string write_sweep_outputs(std::span<const SweepCell> cells,
                                std::span<const SweepRow> rows,
                                const std::string& dir);

// Per-round trace: round, train_ce, train_mmd, test_ce, test_mmd, then
// objectives, accuracy, disparity, and step.
void write_convergence_csv(std::span<const RoundRecord> records,
                           const std::string& path);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};
MeanSE mean_se(std::span<const double> xs);

std::string format_double(double v);  // shortest round-trip decimal

// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace fedfair

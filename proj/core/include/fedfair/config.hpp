#pragma once

#include <cstdint>
#include <string>

#include "fedfair/baselines.hpp"
#include "fedfair/csv.hpp"
#include "fedfair/dp.hpp"
#include "fedfair/fairness.hpp"
#include "fedfair/federation.hpp"
#include "fedfair/kernel.hpp"
#include "fedfair/model.hpp"
#include "fedfair/synthetic.hpp"

namespace fedfair {

enum class TrainerKind {
  algorithm1,   // tracked score sets, statistical parity
  algorithm2,   // tracked score sets, any supported criterion
  centralized,  // pooled full-gradient reference
  local_fair,   // per-client minibatch regulariser
};
std::string trainer_to_string(TrainerKind t);
TrainerKind trainer_from_string(const std::string& s);

enum class DataKind { synthetic, csv };
std::string data_kind_to_string(DataKind d);
DataKind data_kind_from_string(const std::string& s);

enum class KernelKind { gaussian, laplacian, distance };
std::string kernel_kind_to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

// A fully described run: data source, model, criterion, kernel, score
// noise, and training schedule.  Parsed from JSON; see README for the
// schema.
struct RunSpec {
  TrainerKind trainer = TrainerKind::algorithm1;
  std::uint64_t seed = 0;

  DataKind data = DataKind::synthetic;
  SyntheticSpec synthetic;
  CsvSpec csv;
  int min_shard_size = 20;      // csv partitions below this are dropped
  double test_fraction = 0.25;
  bool standardize = false;

  Arch arch = Arch::logistic;
  int hidden = 16;

  Criterion criterion = Criterion::statistical_parity;
  int cond_feature = -1;        // conditional criteria only
  double cond_threshold = 0.0;

  KernelKind kernel = KernelKind::distance;
  double kernel_param = 1.0;    // bandwidth; unused for the distance kernel

  DPMechanism dp;
  FedRunConfig fed;             // fed.seed is overwritten by the top-level seed
  CentralizedConfig centralized;

  void validate() const;        // throws ConfigError naming the field
  FairnessSpec fairness_spec() const;
  KernelPtr build_kernel() const;
  Model build_model(int input_dim) const;
};

// Strict JSON parsing: unknown or ill-typed fields raise ConfigError with
// the field path.
RunSpec parse_run_spec(const std::string& json_text);
RunSpec load_run_spec(const std::string& path);

// Canonical JSON with every field materialised; parsing it reproduces the
// spec exactly.
std::string resolved_json(const RunSpec& spec);

// Identity of the configuration: hash of the resolved JSON minus seed and
// execution-only knobs (fed.threads).  Runs differing only in those share it.
std::string config_hash(const RunSpec& spec);

}  // namespace fedfair

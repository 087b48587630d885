// Command line front end: single runs, lambda sweeps, and ablations on top
// of the fedfair core library.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedfair/errors.hpp"
#include "fedfair/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fedfair;

std::string default_out_dir() {
  const char* env = std::getenv("FEDFAIR_OUT");
  return env && *env ? env : "runs";
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = default_out_dir();
  std::string trainer_override;
  std::string seeds_csv = "0";
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_seeds) {
  cmd->add_option("--config", args.config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir,
                  "Output root (default $FEDFAIR_OUT or ./runs)");
  cmd->add_option("--trainer", args.trainer_override,
                  "Override the configured trainer");
  if (with_seeds) {
    cmd->add_option("--seeds", args.seeds_csv, "Comma-separated seed list");
    cmd->add_option("--workers", args.workers, "Parallel runs")
        ->check(CLI::PositiveNumber);
  }
}

RunSpec load_base(const CommonArgs& args) {
  RunSpec spec = load_run_spec(args.config_path);
  if (!args.trainer_override.empty()) {
    spec.trainer = trainer_from_string(args.trainer_override);
    spec.validate();
  }
  return spec;
}

void print_warnings(const Diagnostics& diag) {
  for (const std::string& w : diag.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<double> resolve_lambdas(const std::string& lambdas_csv,
                                    const std::string& grid) {
  if (!lambdas_csv.empty() && !grid.empty())
    throw ConfigError("--lambdas and --lambda-grid are mutually exclusive");
  if (!lambdas_csv.empty()) return parse_double_list(lambdas_csv);
  std::string g = grid.empty() ? "1e-5:100:8" : grid;
  std::vector<std::string> parts;
  std::stringstream ss(g);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3)
    throw ConfigError("--lambda-grid must look like lo:hi:n, e.g. 1e-5:100:8");
  const double lo = parse_double_list(parts[0]).at(0);
  const double hi = parse_double_list(parts[1]).at(0);
  const int n = static_cast<int>(parse_double_list(parts[2]).at(0));
  return log_grid(lo, hi, n);
}

void write_file_or_die(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file " + path);
  out << content;
}

int cmd_run(const CommonArgs& args, std::optional<std::uint64_t> seed,
            std::optional<double> lambda, std::optional<int> threads) {
  RunSpec spec = load_base(args);
  if (seed) spec.seed = *seed;
  if (lambda) spec.fed.lambda = *lambda;
  if (threads) spec.fed.threads = *threads;
  spec.validate();
  const RunOutput out = execute_run(spec);
  print_warnings(out.result.diagnostics);
  const std::string dir = write_run_outputs(out, args.out_dir);
  const RoundRecord& last = out.result.records.back();
  std::cout << "run " << out.config_id << " seed " << spec.seed << " finished in "
            << format_double(out.wall_seconds) << "s\n"
            << "  test accuracy " << format_double(last.test.accuracy)
            << ", disparity " << format_double(last.test.sp) << ", discrepancy^2 "
            << format_double(last.test.mmd2_total) << "\n"
            << "  outputs: " << fs::absolute(dir).string() << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& lambdas_csv,
              const std::string& grid) {
  RunSpec base = load_base(args);
  base.fed.eval_every = 0;  // sweeps use the final round only
  const std::vector<double> lambdas = resolve_lambdas(lambdas_csv, grid);
  const std::vector<std::uint64_t> seeds = parse_seed_list(args.seeds_csv);
  const std::vector<SweepCell> cells = run_grid(base, lambdas, seeds, args.workers);
  const std::vector<SweepRow> rows = aggregate_sweep(cells);
  const std::string dir =
      (fs::path(args.out_dir) / ("sweep-" + config_hash(base))).string();
  write_sweep_outputs(cells, rows, dir);
  std::cout << "sweep over " << lambdas.size() << " lambdas x " << seeds.size()
            << " seeds\n";
  for (const SweepRow& r : rows)
    std::cout << "  lambda " << format_double(r.lambda) << ": acc "
              << format_double(r.acc_mean) << " +- " << format_double(r.acc_se)
              << ", disparity " << format_double(r.sp_mean) << " +- "
              << format_double(r.sp_se) << "\n";
  std::cout << "  outputs: " << fs::absolute(dir).string() << "\n";
  return 0;
}

int cmd_ablate_set_size(const CommonArgs& args, const std::string& sizes_csv,
                        const std::string& lambdas_csv, const std::string& grid) {
  RunSpec base = load_base(args);
  base.fed.eval_every = 0;
  const std::vector<double> sizes = parse_double_list(sizes_csv);
  const std::vector<double> lambdas = resolve_lambdas(lambdas_csv, grid);
  const std::vector<std::uint64_t> seeds = parse_seed_list(args.seeds_csv);
  const std::string dir =
      (fs::path(args.out_dir) / ("setsize-" + config_hash(base))).string();
  fs::create_directories(dir);

  std::ostringstream table;
  table << "set_size,lambda,n,acc_mean,acc_se,sp_mean,sp_se,mmd2_mean,mmd2_se\n";
  for (const double size : sizes) {
    RunSpec variant = base;
    variant.fed.set_size = static_cast<int>(size);
    const std::vector<SweepCell> cells = run_grid(variant, lambdas, seeds, args.workers);
    for (const SweepRow& r : aggregate_sweep(cells))
      table << variant.fed.set_size << ',' << format_double(r.lambda) << ',' << r.n
            << ',' << format_double(r.acc_mean) << ',' << format_double(r.acc_se)
            << ',' << format_double(r.sp_mean) << ',' << format_double(r.sp_se)
            << ',' << format_double(r.mmd2_mean) << ',' << format_double(r.mmd2_se)
            << '\n';
    std::cout << "set size " << variant.fed.set_size << " done\n";
  }
  const std::string path = (fs::path(dir) / "setsize.csv").string();
  write_file_or_die(path, table.str());
  std::cout << "  outputs: " << fs::absolute(path).string() << "\n";
  return 0;
}

int cmd_ablate_heterogeneity(const CommonArgs& args, const std::string& alphas_csv,
                             double lambda) {
  RunSpec base = load_base(args);
  if (base.data != DataKind::synthetic)
    throw ConfigError("the heterogeneity ablation needs synthetic data");
  base.fed.eval_every = 0;
  const std::vector<double> alphas = parse_double_list(alphas_csv);
  const std::vector<std::uint64_t> seeds = parse_seed_list(args.seeds_csv);
  const std::vector<double> lambdas = {lambda};
  const std::string dir =
      (fs::path(args.out_dir) / ("heterogeneity-" + config_hash(base))).string();
  fs::create_directories(dir);

  std::ostringstream table;
  table << "heterogeneity,lambda,n,acc_mean,acc_se,sp_mean,sp_se\n";
  for (const double alpha : alphas) {
    RunSpec variant = base;
    variant.synthetic.heterogeneity = alpha;
    const std::vector<SweepCell> cells = run_grid(variant, lambdas, seeds, args.workers);
    const SweepRow r = aggregate_sweep(cells).at(0);
    table << format_double(alpha) << ',' << format_double(r.lambda) << ',' << r.n
          << ',' << format_double(r.acc_mean) << ',' << format_double(r.acc_se)
          << ',' << format_double(r.sp_mean) << ',' << format_double(r.sp_se) << '\n';
    std::cout << "heterogeneity " << format_double(alpha) << " done\n";
  }
  const std::string path = (fs::path(dir) / "heterogeneity.csv").string();
  write_file_or_die(path, table.str());
  std::cout << "  outputs: " << fs::absolute(path).string() << "\n";
  return 0;
}

int cmd_ablate_convergence(const CommonArgs& args, double lambda) {
  RunSpec base = load_base(args);
  base.fed.eval_every = 1;  // per-round traces
  const std::vector<double> lambdas = {lambda};
  const std::vector<std::uint64_t> seeds = parse_seed_list(args.seeds_csv);
  const std::vector<SweepCell> cells = run_grid(base, lambdas, seeds, args.workers);
  const std::string dir =
      (fs::path(args.out_dir) / ("convergence-" + config_hash(base))).string();
  fs::create_directories(dir);
  for (const SweepCell& cell : cells) {
    const std::string path =
        (fs::path(dir) / ("convergence_s" + std::to_string(cell.seed) + ".csv"))
            .string();
    write_convergence_csv(cell.records, path);
  }
  std::cout << "convergence traces for " << seeds.size() << " seeds at lambda "
            << format_double(lambda) << "\n  outputs: " << fs::absolute(dir).string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-regularised federated training simulator"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_lambda;
  std::optional<int> run_threads;
  CLI::App* run = app.add_subcommand("run", "Execute one run and write its outputs");
  add_common(run, run_args, false);
  run->add_option("--seed", run_seed, "Override the configured seed");
  run->add_option("--lambda", run_lambda, "Override the configured lambda");
  run->add_option("--threads", run_threads, "Client updates per round in parallel")
      ->check(CLI::PositiveNumber);

  CommonArgs sweep_args;
  std::string sweep_lambdas, sweep_grid;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a lambda x seed grid");
  add_common(sweep, sweep_args, true);
  sweep->add_option("--lambdas", sweep_lambdas, "Comma-separated lambda list");
  sweep->add_option("--lambda-grid", sweep_grid,
                    "Log-spaced grid lo:hi:n (default 1e-5:100:8)");

  CLI::App* ablate = app.add_subcommand("ablate", "Sensitivity studies");
  ablate->require_subcommand(1);

  CommonArgs size_args;
  std::string sizes_csv = "20,50,100", size_lambdas, size_grid;
  CLI::App* size_cmd =
      ablate->add_subcommand("set_size", "Vary the broadcast score sample size");
  add_common(size_cmd, size_args, true);
  size_cmd->add_option("--sizes", sizes_csv, "Comma-separated set sizes");
  size_cmd->add_option("--lambdas", size_lambdas, "Comma-separated lambda list");
  size_cmd->add_option("--lambda-grid", size_grid, "Log-spaced grid lo:hi:n");

  CommonArgs het_args;
  std::string alphas_csv = "0.5,0.6,0.7,0.8,0.9,1.0";
  double het_lambda = 50.0;
  CLI::App* het_cmd =
      ablate->add_subcommand("heterogeneity", "Vary the synthetic mixture parameter");
  add_common(het_cmd, het_args, true);
  het_cmd->add_option("--alphas", alphas_csv, "Comma-separated mixture parameters");
  het_cmd->add_option("--lambda", het_lambda, "Fixed lambda for the ablation");

  CommonArgs conv_args;
  double conv_lambda = 0.5;
  CLI::App* conv_cmd =
      ablate->add_subcommand("convergence", "Per-round objective traces");
  add_common(conv_cmd, conv_args, true);
  conv_cmd->add_option("--lambda", conv_lambda, "Fixed lambda for the traces");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args, run_seed, run_lambda, run_threads);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_lambdas, sweep_grid);
    if (size_cmd->parsed())
      return cmd_ablate_set_size(size_args, sizes_csv, size_lambdas, size_grid);
    if (het_cmd->parsed()) return cmd_ablate_heterogeneity(het_args, alphas_csv, het_lambda);
    if (conv_cmd->parsed()) return cmd_ablate_convergence(conv_args, conv_lambda);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

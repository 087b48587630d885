#include "fedfair/config.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "fedfair/errors.hpp"
#include "nlohmann/json.hpp"

namespace fedfair {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string trainer_to_string(TrainerKind t) {
  switch (t) {
    case TrainerKind::algorithm1: return "algorithm1";
    case TrainerKind::algorithm2: return "algorithm2";
    case TrainerKind::centralized: return "centralized";
    case TrainerKind::local_fair: return "local_fair";
  }
  return "algorithm1";
}

TrainerKind trainer_from_string(const std::string& s) {
  if (s == "algorithm1") return TrainerKind::algorithm1;
  if (s == "algorithm2") return TrainerKind::algorithm2;
  if (s == "centralized") return TrainerKind::centralized;
  if (s == "local_fair") return TrainerKind::local_fair;
  throw ConfigError("unknown trainer \"" + s +
                    "\"; expected algorithm1, algorithm2, centralized, or local_fair");
}

std::string data_kind_to_string(DataKind d) {
  return d == DataKind::synthetic ? "synthetic" : "csv";
}

DataKind data_kind_from_string(const std::string& s) {
  if (s == "synthetic") return DataKind::synthetic;
  if (s == "csv") return DataKind::csv;
  throw ConfigError("unknown data.kind \"" + s + "\"; expected synthetic or csv");
}

std::string kernel_kind_to_string(KernelKind k) {
  switch (k) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::laplacian: return "laplacian";
    case KernelKind::distance: return "distance";
  }
  return "distance";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "laplacian") return KernelKind::laplacian;
  if (s == "distance") return KernelKind::distance;
  throw ConfigError("unknown kernel.kind \"" + s +
                    "\"; expected gaussian, laplacian, or distance");
}

namespace {

[[noreturn]] void bad_field(const std::string& path, const char* expected) {
  throw ConfigError("config field " + path + " must be " + expected);
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) bad_field(path, "an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config field " + path + "." + item.key());
  }
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad_field(path + "." + key, "a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad_field(path + "." + key, "an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad_field(path + "." + key, "a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad_field(path + "." + key, "a string");
  return v.get<std::string>();
}

void parse_data(const json& v, RunSpec& spec) {
  require_object(v, "data");
  const std::string kind = get_string(v, "data", "kind", "synthetic");
  spec.data = data_kind_from_string(kind);
  if (spec.data == DataKind::synthetic) {
    check_keys(v, "data",
               {"kind", "n_clients", "samples_per_client", "dim", "heterogeneity",
                "test_fraction", "standardize"});
    spec.synthetic.n_clients = get_int(v, "data", "n_clients", spec.synthetic.n_clients);
    spec.synthetic.samples_per_client =
        get_int(v, "data", "samples_per_client", spec.synthetic.samples_per_client);
    spec.synthetic.dim = get_int(v, "data", "dim", spec.synthetic.dim);
    spec.synthetic.heterogeneity =
        get_double(v, "data", "heterogeneity", spec.synthetic.heterogeneity);
  } else {
    check_keys(v, "data",
               {"kind", "path", "feature_cols", "label_col", "protected_col",
                "protected_threshold", "partition_col", "min_shard_size",
                "test_fraction", "standardize"});
    spec.csv.path = get_string(v, "data", "path", "");
    if (v.contains("feature_cols")) {
      const json& cols = v.at("feature_cols");
      if (!cols.is_array()) bad_field("data.feature_cols", "an array of strings");
      spec.csv.feature_cols.clear();
      for (const json& c : cols) {
        if (!c.is_string()) bad_field("data.feature_cols", "an array of strings");
        spec.csv.feature_cols.push_back(c.get<std::string>());
      }
    }
    spec.csv.label_col = get_string(v, "data", "label_col", "");
    spec.csv.protected_col = get_string(v, "data", "protected_col", "");
    if (v.contains("protected_threshold")) {
      if (!v.at("protected_threshold").is_number())
        bad_field("data.protected_threshold", "a number");
      spec.csv.protected_threshold = v.at("protected_threshold").get<double>();
    }
    if (v.contains("partition_col"))
      spec.csv.partition_col = get_string(v, "data", "partition_col", "");
    spec.min_shard_size = get_int(v, "data", "min_shard_size", spec.min_shard_size);
  }
  spec.test_fraction = get_double(v, "data", "test_fraction", spec.test_fraction);
  spec.standardize = get_bool(v, "data", "standardize", spec.standardize);
}

void parse_fed(const json& v, FedRunConfig& fed) {
  require_object(v, "fed");
  check_keys(v, "fed",
             {"rounds", "local_epochs", "local_step", "step_decay", "global_step",
              "clients_per_round", "lambda", "set_size", "batch_size",
              "weighted_aggregation", "exhaustive_sets", "eval_every", "threads"});
  fed.rounds = get_int(v, "fed", "rounds", fed.rounds);
  fed.local_epochs = get_int(v, "fed", "local_epochs", fed.local_epochs);
  fed.local_step = get_double(v, "fed", "local_step", fed.local_step);
  fed.step_decay = get_double(v, "fed", "step_decay", fed.step_decay);
  fed.global_step = get_double(v, "fed", "global_step", fed.global_step);
  fed.clients_per_round = get_int(v, "fed", "clients_per_round", fed.clients_per_round);
  fed.lambda = get_double(v, "fed", "lambda", fed.lambda);
  fed.set_size = get_int(v, "fed", "set_size", fed.set_size);
  fed.batch_size = get_int(v, "fed", "batch_size", fed.batch_size);
  fed.weighted_aggregation =
      get_bool(v, "fed", "weighted_aggregation", fed.weighted_aggregation);
  fed.exhaustive_sets = get_bool(v, "fed", "exhaustive_sets", fed.exhaustive_sets);
  fed.eval_every = get_int(v, "fed", "eval_every", fed.eval_every);
  fed.threads = get_int(v, "fed", "threads", fed.threads);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

RunSpec parse_run_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_object(root, "config");
  check_keys(root, "config",
             {"trainer", "seed", "data", "model", "fairness", "kernel", "dp", "fed",
              "centralized"});

  RunSpec spec;
  if (root.contains("trainer"))
    spec.trainer = trainer_from_string(get_string(root, "config", "trainer", ""));
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_integer()) bad_field("config.seed", "a nonnegative integer");
    if (!s.is_number_unsigned() && s.get<long long>() < 0)
      bad_field("config.seed", "a nonnegative integer");
    spec.seed = s.get<std::uint64_t>();
  }
  if (root.contains("data")) parse_data(root.at("data"), spec);
  if (root.contains("model")) {
    const json& v = root.at("model");
    require_object(v, "model");
    check_keys(v, "model", {"arch", "hidden"});
    if (v.contains("arch")) {
      try {
        spec.arch = arch_from_string(get_string(v, "model", "arch", ""));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("model.arch: ") + e.what());
      }
    }
    spec.hidden = get_int(v, "model", "hidden", spec.hidden);
  }
  if (root.contains("fairness")) {
    const json& v = root.at("fairness");
    require_object(v, "fairness");
    check_keys(v, "fairness", {"criterion", "feature_index", "threshold"});
    if (v.contains("criterion"))
      spec.criterion = criterion_from_string(get_string(v, "fairness", "criterion", ""));
    spec.cond_feature = get_int(v, "fairness", "feature_index", spec.cond_feature);
    spec.cond_threshold = get_double(v, "fairness", "threshold", spec.cond_threshold);
  }
  if (root.contains("kernel")) {
    const json& v = root.at("kernel");
    require_object(v, "kernel");
    check_keys(v, "kernel", {"kind", "param"});
    if (v.contains("kind"))
      spec.kernel = kernel_kind_from_string(get_string(v, "kernel", "kind", ""));
    spec.kernel_param = get_double(v, "kernel", "param", spec.kernel_param);
  }
  if (root.contains("dp")) {
    const json& v = root.at("dp");
    require_object(v, "dp");
    check_keys(v, "dp", {"kind", "scale", "clip_lo", "clip_hi"});
    if (v.contains("kind"))
      spec.dp.kind = dp_kind_from_string(get_string(v, "dp", "kind", ""));
    spec.dp.scale = get_double(v, "dp", "scale", spec.dp.scale);
    spec.dp.clip_lo = get_double(v, "dp", "clip_lo", spec.dp.clip_lo);
    spec.dp.clip_hi = get_double(v, "dp", "clip_hi", spec.dp.clip_hi);
  }
  if (root.contains("fed")) parse_fed(root.at("fed"), spec.fed);
  if (root.contains("centralized")) {
    const json& v = root.at("centralized");
    require_object(v, "centralized");
    check_keys(v, "centralized", {"epochs", "step", "step_decay", "eval_every"});
    spec.centralized.epochs = get_int(v, "centralized", "epochs", spec.centralized.epochs);
    spec.centralized.step = get_double(v, "centralized", "step", spec.centralized.step);
    spec.centralized.step_decay =
        get_double(v, "centralized", "step_decay", spec.centralized.step_decay);
    spec.centralized.eval_every =
        get_int(v, "centralized", "eval_every", spec.centralized.eval_every);
  }
  spec.validate();
  return spec;
}

RunSpec load_run_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_spec(buf.str());
}

void RunSpec::validate() const {
  if (trainer == TrainerKind::algorithm1 && criterion != Criterion::statistical_parity)
    throw ConfigError(
        "trainer algorithm1 supports the statistical_parity criterion only; "
        "use algorithm2 for other criteria");
  if (!(test_fraction >= 0.0) || test_fraction >= 1.0)
    throw ConfigError("data.test_fraction must be in [0, 1)");
  if (min_shard_size < 1) throw ConfigError("data.min_shard_size must be at least 1");
  if (data == DataKind::synthetic) {
    if (synthetic.n_clients < 1) throw ConfigError("data.n_clients must be at least 1");
    if (synthetic.samples_per_client < 1)
      throw ConfigError("data.samples_per_client must be at least 1");
    if (synthetic.dim < 1) throw ConfigError("data.dim must be at least 1");
    if (!(synthetic.heterogeneity >= 0.5) || synthetic.heterogeneity > 1.0)
      throw ConfigError("data.heterogeneity must be in [0.5, 1]");
  } else {
    if (csv.path.empty()) throw ConfigError("data.path is required for csv data");
    if (csv.feature_cols.empty())
      throw ConfigError("data.feature_cols is required for csv data");
    if (csv.label_col.empty()) throw ConfigError("data.label_col is required for csv data");
    if (csv.protected_col.empty())
      throw ConfigError("data.protected_col is required for csv data");
  }
  if (arch == Arch::mlp && hidden < 1)
    throw ConfigError("model.hidden must be at least 1 for the mlp arch");
  if (criterion == Criterion::conditional_statistical_parity && cond_feature < 0)
    throw ConfigError(
        "fairness.feature_index is required for conditional_statistical_parity");
  if (kernel != KernelKind::distance && !(kernel_param > 0.0))
    throw ConfigError("kernel.param must be positive");
  dp.validate();
  if (!(fed.lambda >= 0.0)) throw ConfigError("fed.lambda must be nonnegative");
  if (trainer == TrainerKind::centralized) centralized.validate();
}

FairnessSpec RunSpec::fairness_spec() const {
  if (criterion == Criterion::conditional_statistical_parity)
    return FairnessSpec::conditional(cond_feature, cond_threshold);
  return FairnessSpec::make(criterion);
}

KernelPtr RunSpec::build_kernel() const {
  switch (kernel) {
    case KernelKind::gaussian: return make_gaussian(kernel_param);
    case KernelKind::laplacian: return make_laplacian(kernel_param);
    case KernelKind::distance: return make_distance_induced();
  }
  return make_distance_induced();
}

Model RunSpec::build_model(int input_dim) const {
  return arch == Arch::logistic ? Model::logistic(input_dim)
                                : Model::mlp(input_dim, hidden);
}

std::string resolved_json(const RunSpec& spec) {
  ordered_json root;
  root["trainer"] = trainer_to_string(spec.trainer);
  root["seed"] = spec.seed;

  ordered_json data;
  data["kind"] = data_kind_to_string(spec.data);
  if (spec.data == DataKind::synthetic) {
    data["n_clients"] = spec.synthetic.n_clients;
    data["samples_per_client"] = spec.synthetic.samples_per_client;
    data["dim"] = spec.synthetic.dim;
    data["heterogeneity"] = spec.synthetic.heterogeneity;
  } else {
    data["path"] = spec.csv.path;
    data["feature_cols"] = spec.csv.feature_cols;
    data["label_col"] = spec.csv.label_col;
    data["protected_col"] = spec.csv.protected_col;
    if (spec.csv.protected_threshold)
      data["protected_threshold"] = *spec.csv.protected_threshold;
    if (spec.csv.partition_col) data["partition_col"] = *spec.csv.partition_col;
    data["min_shard_size"] = spec.min_shard_size;
  }
  data["test_fraction"] = spec.test_fraction;
  data["standardize"] = spec.standardize;
  root["data"] = std::move(data);

  root["model"] = ordered_json{{"arch", arch_to_string(spec.arch)},
                               {"hidden", spec.hidden}};

  ordered_json fair;
  fair["criterion"] = criterion_to_string(spec.criterion);
  if (spec.criterion == Criterion::conditional_statistical_parity) {
    fair["feature_index"] = spec.cond_feature;
    fair["threshold"] = spec.cond_threshold;
  }
  root["fairness"] = std::move(fair);

  ordered_json kern;
  kern["kind"] = kernel_kind_to_string(spec.kernel);
  if (spec.kernel != KernelKind::distance) kern["param"] = spec.kernel_param;
  root["kernel"] = std::move(kern);

  root["dp"] = ordered_json{{"kind", dp_kind_to_string(spec.dp.kind)},
                            {"scale", spec.dp.scale},
                            {"clip_lo", spec.dp.clip_lo},
                            {"clip_hi", spec.dp.clip_hi}};

  root["fed"] = ordered_json{{"rounds", spec.fed.rounds},
                             {"local_epochs", spec.fed.local_epochs},
                             {"local_step", spec.fed.local_step},
                             {"step_decay", spec.fed.step_decay},
                             {"global_step", spec.fed.global_step},
                             {"clients_per_round", spec.fed.clients_per_round},
                             {"lambda", spec.fed.lambda},
                             {"set_size", spec.fed.set_size},
                             {"batch_size", spec.fed.batch_size},
                             {"weighted_aggregation", spec.fed.weighted_aggregation},
                             {"exhaustive_sets", spec.fed.exhaustive_sets},
                             {"eval_every", spec.fed.eval_every},
                             {"threads", spec.fed.threads}};

  root["centralized"] = ordered_json{{"epochs", spec.centralized.epochs},
                                     {"step", spec.centralized.step},
                                     {"step_decay", spec.centralized.step_decay},
                                     {"eval_every", spec.centralized.eval_every}};
  return root.dump(2) + "\n";
}

std::string config_hash(const RunSpec& spec) {
  RunSpec canon = spec;
  canon.seed = 0;
  canon.fed.threads = 1;
  const std::uint64_t h = fnv1a64(resolved_json(canon));
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(12, '0');
  for (int i = 0; i < 12; ++i)
    out[static_cast<std::size_t>(i)] = kHex[(h >> (44 - 4 * i)) & 0xfULL];
  return out;
}

}  // namespace fedfair

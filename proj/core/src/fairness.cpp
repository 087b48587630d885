#include "fedfair/fairness.hpp"

#include <algorithm>
#include <cmath>

#include "fedfair/errors.hpp"
#include "fedfair/summation.hpp"

namespace fedfair {
namespace {

// Sorted view with prefix sums; O(log n) absolute-difference sums against a
// fixed sample for the distance-induced kernel.
struct SortedSample {
  std::vector<double> values;       // ascending
  std::vector<double> prefix;       // prefix[i] = sum of values[0..i)
  double total = 0.0;

  explicit SortedSample(std::span<const double> xs)
      : values(xs.begin(), xs.end()) {
    std::sort(values.begin(), values.end());
    prefix.resize(values.size() + 1);
    prefix[0] = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      prefix[i + 1] = prefix[i] + values[i];
    total = prefix[values.size()];
  }

  // sum_j |z - values[j]|
  double abs_sum(double z) const {
    const auto m = static_cast<std::size_t>(
        std::upper_bound(values.begin(), values.end(), z) - values.begin());
    const double below = z * static_cast<double>(m) - prefix[m];
    const double above = (total - prefix[m]) - z * static_cast<double>(values.size() - m);
    return below + above;
  }

  // #(values > z) - #(values < z)
  long sign_balance(double z) const {
    const auto lo = static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), z) - values.begin());
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(values.begin(), values.end(), z) - values.begin());
    const long less = static_cast<long>(lo);
    const long greater = static_cast<long>(values.size() - hi);
    return greater - less;
  }
};

// mean_i mean_j |a_i - b_j| via sorted prefix sums.
double mean_abs_diff(const SortedSample& a, const SortedSample& b) {
  ExactSum sum;
  for (double z : a.values) sum.add(b.abs_sum(z));
  return sum.value() /
         (static_cast<double>(a.values.size()) * static_cast<double>(b.values.size()));
}

double mean_kernel(std::span<const double> a, std::span<const double> b,
                   const Kernel& kernel) {
  ExactSum sum;
  for (double x : a)
    for (double y : b) sum.add(kernel.eval(x, y));
  return sum.value() / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

struct WeightedSorted {
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<double> wprefix;   // weight prefix
  std::vector<double> wvprefix;  // weight*value prefix

  WeightedSorted(std::span<const double> xs, std::span<const double> ws) {
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      if (xs[i] != xs[j]) return xs[i] < xs[j];
      return ws[i] < ws[j];
    });
    values.resize(xs.size());
    weights.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      values[i] = xs[order[i]];
      weights[i] = ws[order[i]];
    }
    wprefix.resize(xs.size() + 1);
    wvprefix.resize(xs.size() + 1);
    wprefix[0] = wvprefix[0] = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      wprefix[i + 1] = wprefix[i] + weights[i];
      wvprefix[i + 1] = wvprefix[i] + weights[i] * values[i];
    }
  }

  // sum_j w_j |z - values[j]|
  double weighted_abs_sum(double z) const {
    const auto m = static_cast<std::size_t>(
        std::upper_bound(values.begin(), values.end(), z) - values.begin());
    const std::size_t n = values.size();
    const double below = z * wprefix[m] - wvprefix[m];
    const double above = (wvprefix[n] - wvprefix[m]) - z * (wprefix[n] - wprefix[m]);
    return below + above;
  }
};

double weighted_mean_abs_diff(const WeightedSorted& a, const WeightedSorted& b) {
  ExactSum sum;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    sum.add(a.weights[i] * b.weighted_abs_sum(a.values[i]));
  return sum.value();
}

double weighted_mean_kernel(std::span<const double> a, std::span<const double> wa,
                            std::span<const double> b, std::span<const double> wb,
                            const Kernel& kernel) {
  ExactSum sum;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      sum.add(wa[i] * wb[j] * kernel.eval(a[i], b[j]));
  return sum.value();
}

void check_weights(std::span<const double> s, std::span<const double> w,
                   const char* what) {
  if (s.size() != w.size())
    throw ValidationError(std::string(what) + ": weight length mismatch");
  ExactSum sum;
  for (double x : w) {
    if (!(x >= 0.0)) throw ValidationError(std::string(what) + ": negative weight");
    sum.add(x);
  }
  if (std::fabs(sum.value() - 1.0) > 1e-9)
    throw ValidationError(std::string(what) + ": weights must sum to 1");
}

}  // namespace

std::string criterion_to_string(Criterion c) {
  switch (c) {
    case Criterion::statistical_parity: return "statistical_parity";
    case Criterion::equal_opportunity: return "equal_opportunity";
    case Criterion::equalized_odds: return "equalized_odds";
    case Criterion::risk_parity: return "risk_parity";
    case Criterion::conditional_statistical_parity: return "conditional_statistical_parity";
    case Criterion::predictive_equality: return "predictive_equality";
  }
  throw ValidationError("criterion_to_string: bad enum value");
}

Criterion criterion_from_string(const std::string& s) {
  if (s == "statistical_parity") return Criterion::statistical_parity;
  if (s == "equal_opportunity") return Criterion::equal_opportunity;
  if (s == "equalized_odds") return Criterion::equalized_odds;
  if (s == "risk_parity") return Criterion::risk_parity;
  if (s == "conditional_statistical_parity") return Criterion::conditional_statistical_parity;
  if (s == "predictive_equality") return Criterion::predictive_equality;
  throw ConfigError("unknown fairness criterion '" + s + "'");
}

std::string ConditioningSet::name() const {
  if (label && feature_index)
    return "x" + std::to_string(*feature_index) + ">" + std::to_string(feature_threshold) +
           ",y=" + std::to_string(*label);
  if (label) return "y=" + std::to_string(*label);
  if (feature_index)
    return "x" + std::to_string(*feature_index) + ">" + std::to_string(feature_threshold);
  return "all";
}

FairnessSpec FairnessSpec::make(Criterion c) {
  FairnessSpec spec;
  spec.criterion = c;
  switch (c) {
    case Criterion::statistical_parity:
      spec.score = ScoreKind::prediction;
      spec.sets = {ConditioningSet{}};
      break;
    case Criterion::equal_opportunity:
      spec.score = ScoreKind::prediction;
      spec.sets = {ConditioningSet{.label = 1}};
      break;
    case Criterion::equalized_odds:
      spec.score = ScoreKind::prediction;
      spec.sets = {ConditioningSet{.label = 0}, ConditioningSet{.label = 1}};
      break;
    case Criterion::risk_parity:
      spec.score = ScoreKind::loss;
      spec.sets = {ConditioningSet{}};
      break;
    case Criterion::predictive_equality:
      spec.score = ScoreKind::prediction;
      spec.sets = {ConditioningSet{.label = 0}};
      break;
    case Criterion::conditional_statistical_parity:
      throw ValidationError(
          "FairnessSpec::make: conditional_statistical_parity needs a feature "
          "threshold; use FairnessSpec::conditional");
  }
  return spec;
}

FairnessSpec FairnessSpec::conditional(int feature_index, double threshold) {
  if (feature_index < 0)
    throw ValidationError("FairnessSpec::conditional: feature_index must be >= 0");
  FairnessSpec spec;
  spec.criterion = Criterion::conditional_statistical_parity;
  spec.score = ScoreKind::prediction;
  spec.sets = {ConditioningSet{.feature_index = feature_index,
                               .feature_threshold = threshold}};
  return spec;
}

double score_value(const Model& model, ScoreKind kind, std::span<const double> x,
                   int y) {
  const double h = model.predict(x);
  return kind == ScoreKind::prediction ? h : Model::sample_loss(h, y);
}

double mmd_squared(std::span<const double> s0, std::span<const double> s1,
                   const Kernel& kernel) {
  if (s0.empty() || s1.empty())
    throw DegenerateGroupError("mmd_squared: empty score sample");
  if (kernel.is_distance_induced()) {
    const SortedSample a(s0), b(s1);
    return 2.0 * mean_abs_diff(a, b) - mean_abs_diff(a, a) - mean_abs_diff(b, b);
  }
  return mean_kernel(s0, s0, kernel) + mean_kernel(s1, s1, kernel) -
         2.0 * mean_kernel(s0, s1, kernel);
}

double weighted_mmd_squared(std::span<const double> s0, std::span<const double> w0,
                            std::span<const double> s1, std::span<const double> w1,
                            const Kernel& kernel) {
  if (s0.empty() || s1.empty())
    throw DegenerateGroupError("weighted_mmd_squared: empty score sample");
  check_weights(s0, w0, "weighted_mmd_squared");
  check_weights(s1, w1, "weighted_mmd_squared");
  if (kernel.is_distance_induced()) {
    const WeightedSorted a(s0, w0), b(s1, w1);
    return 2.0 * weighted_mean_abs_diff(a, b) - weighted_mean_abs_diff(a, a) -
           weighted_mean_abs_diff(b, b);
  }
  return weighted_mean_kernel(s0, w0, s0, w0, kernel) +
         weighted_mean_kernel(s1, w1, s1, w1, kernel) -
         2.0 * weighted_mean_kernel(s0, w0, s1, w1, kernel);
}

double c_function(double z, std::span<const double> y0, std::span<const double> y1,
                  const Kernel& kernel) {
  if (y0.empty() || y1.empty())
    throw DegenerateGroupError("c_function: empty score set");
  ExactSum m0, m1;
  for (double y : y0) m0.add(kernel.eval(z, y));
  for (double y : y1) m1.add(kernel.eval(z, y));
  return m0.value() / static_cast<double>(y0.size()) -
         m1.value() / static_cast<double>(y1.size());
}

double c_prime(double z, std::span<const double> y0, std::span<const double> y1,
               const Kernel& kernel) {
  if (y0.empty() || y1.empty())
    throw DegenerateGroupError("c_prime: empty score set");
  ExactSum m0, m1;
  for (double y : y0) m0.add(kernel.grad1(z, y));
  for (double y : y1) m1.add(kernel.grad1(z, y));
  return m0.value() / static_cast<double>(y0.size()) -
         m1.value() / static_cast<double>(y1.size());
}

namespace {

// Per-set C' evaluator; binary-search counting for the distance kernel,
// plain averaging otherwise.  Broadcast sets are ascending, which the
// distance path relies on.
struct CPrimeQuery {
  const Kernel& kernel;
  std::span<const double> y0;
  std::span<const double> y1;

  double operator()(double z) const {
    if (kernel.is_distance_induced()) {
      return static_cast<double>(balance(y0, z)) / static_cast<double>(y0.size()) -
             static_cast<double>(balance(y1, z)) / static_cast<double>(y1.size());
    }
    ExactSum m0, m1;
    for (double y : y0) m0.add(kernel.grad1(z, y));
    for (double y : y1) m1.add(kernel.grad1(z, y));
    return m0.value() / static_cast<double>(y0.size()) -
           m1.value() / static_cast<double>(y1.size());
  }

  // grad1 of -|z - y| averages to (#above - #below) / n.
  static long balance(std::span<const double> ys, double z) {
    const auto lo = std::lower_bound(ys.begin(), ys.end(), z) - ys.begin();
    const auto hi = std::upper_bound(ys.begin(), ys.end(), z) - ys.begin();
    return static_cast<long>(ys.size() - static_cast<std::size_t>(hi)) - static_cast<long>(lo);
  }
};

}  // namespace

FairnessGradStats grad_fk(const Model& model, const TabularDataset& data,
                          std::span<const int> batch, const FairnessSpec& spec,
                          std::span<const std::array<double, 2>> alpha_k,
                          const PredictionSets& sets, const Kernel& kernel,
                          std::span<double> grad_out) {
  if (grad_out.size() != model.param_count())
    throw ValidationError("grad_fk: gradient size mismatch");
  if (sets.scores.size() != spec.n_sets() || alpha_k.size() != spec.n_sets())
    throw ValidationError("grad_fk: set/alpha arity mismatch with fairness spec");

  FairnessGradStats stats;
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  const std::size_t p = grad_out.size();
  std::vector<double> zgrad(p);
  std::vector<ExactSum> acc(p);
  std::vector<int> members;

  for (std::size_t j = 0; j < spec.n_sets(); ++j) {
    if (!sets.active[j]) continue;
    const CPrimeQuery cquery{kernel, sets.scores[j][0], sets.scores[j][1]};
    for (int a = 0; a < 2; ++a) {
      const double alpha = alpha_k[j][static_cast<std::size_t>(a)];
      members.clear();
      for (int i : batch) {
        if (data.group(i) == a && spec.sets[j].contains(data.row(i), data.label(i)))
          members.push_back(i);
      }
      if (members.empty()) {
        if (alpha != 0.0) ++stats.empty_subgroup_terms;
        continue;
      }
      if (alpha == 0.0) continue;
      for (auto& s : acc) s.reset();
      for (int i : members) {
        const double h = model.predict_logit_grad(data.row(i), zgrad);
        double s, factor;
        if (spec.score == ScoreKind::prediction) {
          s = h;
          factor = h * (1.0 - h);
        } else {
          s = Model::sample_loss(h, data.label(i));
          factor = h - static_cast<double>(data.label(i));
        }
        const double w = cquery(s) * factor;
        for (std::size_t c = 0; c < p; ++c) acc[c].add(w * zgrad[c]);
      }
      const double sign = a == 0 ? 1.0 : -1.0;
      const double coef = sign * 2.0 * alpha / static_cast<double>(members.size());
      for (std::size_t c = 0; c < p; ++c) grad_out[c] += coef * acc[c].value();
    }
  }
  return stats;
}

double sp_unfairness(const Model& model, const TabularDataset& data) {
  long n[2] = {0, 0};
  long pos[2] = {0, 0};
  for (int i = 0; i < data.size(); ++i) {
    const int a = data.group(i);
    ++n[a];
    if (model.predict(data.row(i)) >= 0.5) ++pos[a];
  }
  if (n[0] == 0 || n[1] == 0)
    throw DegenerateGroupError("sp_unfairness: a protected group has no samples");
  return std::fabs(static_cast<double>(pos[0]) / static_cast<double>(n[0]) -
                   static_cast<double>(pos[1]) / static_cast<double>(n[1]));
}

std::vector<std::array<std::vector<double>, 2>> collect_scores(
    const Model& model, const TabularDataset& data, std::span<const int> rows,
    const FairnessSpec& spec) {
  std::vector<std::array<std::vector<double>, 2>> out(spec.n_sets());
  for (int i : rows) {
    const auto x = data.row(i);
    const int y = data.label(i);
    const int a = data.group(i);
    for (std::size_t j = 0; j < spec.n_sets(); ++j) {
      if (spec.sets[j].contains(x, y))
        out[j][static_cast<std::size_t>(a)].push_back(
            score_value(model, spec.score, x, y));
    }
  }
  for (auto& pair : out)
    for (auto& s : pair) std::sort(s.begin(), s.end());
  return out;
}

double mmd_unfairness(const Model& model, const TabularDataset& data,
                      const FairnessSpec& spec, const Kernel& kernel) {
  std::vector<int> rows(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
  const auto scores = collect_scores(model, data, rows, spec);
  double worst = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j][0].empty() || scores[j][1].empty())
      throw DegenerateGroupError("mmd_unfairness: no samples for a group in set '" +
                                 spec.sets[j].name() + "'");
    const double m2 = mmd_squared(scores[j][0], scores[j][1], kernel);
    worst = std::max(worst, std::sqrt(std::max(0.0, m2)));
  }
  return worst;
}

DecompositionCheck decomposition_counterexample_check(const Kernel& kernel) {
  // Client 1: group-0 scores at {0}, group-1 scores at {1}; client 2 swapped;
  // equal client weights.
  const std::vector<double> zero{0.0}, one{1.0};
  const std::vector<double> mix0{0.0, 1.0}, mix1{1.0, 0.0};
  DecompositionCheck out;
  out.mixture_discrepancy = mmd_squared(mix0, mix1, kernel);
  out.client_average = 0.5 * mmd_squared(zero, one, kernel) +
                       0.5 * mmd_squared(one, zero, kernel);
  return out;
}

}  // namespace fedfair

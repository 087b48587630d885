#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedfair/dataset.hpp"
#include "fedfair/kernel.hpp"
#include "fedfair/model.hpp"

namespace fedfair {

enum class Criterion {
  statistical_parity,
  equal_opportunity,
  equalized_odds,
  risk_parity,
  conditional_statistical_parity,
  predictive_equality,
};

std::string criterion_to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

// What the regularised score S(h(x), y) is.
enum class ScoreKind { prediction, loss };

// Predicate selecting the (x, y) pairs a discrepancy term conditions on.
struct ConditioningSet {
  std::optional<int> label;          // y must match
  std::optional<int> feature_index;  // x[feature_index] > feature_threshold
  double feature_threshold = 0.0;

  bool contains(std::span<const double> x, int y) const {
    if (label && y != *label) return false;
    if (feature_index && !(x[static_cast<std::size_t>(*feature_index)] > feature_threshold))
      return false;
    return true;
  }
  std::string name() const;
};

// A group-fairness criterion as score kind plus conditioning sets; one
// discrepancy term per set.
struct FairnessSpec {
  Criterion criterion = Criterion::statistical_parity;
  ScoreKind score = ScoreKind::prediction;
  std::vector<ConditioningSet> sets;

  static FairnessSpec make(Criterion c);
  // conditional_statistical_parity over {x : x[feature_index] > threshold}.
  static FairnessSpec conditional(int feature_index, double threshold);
  std::size_t n_sets() const { return sets.size(); }
};

// Score samples broadcast each round: scores[j][a] holds an ascending score
// sample for protected group a within conditioning set j.
struct PredictionSets {
  int round = 0;
  std::vector<std::array<std::vector<double>, 2>> scores;
  std::vector<std::uint8_t> active;  // per set: both groups globally nonempty
};

// Mixture correction weights alpha[k][j][a] = P_k[...] / P[...] plus the
// global group counts that produced them.
struct AlphaWeights {
  std::vector<std::vector<std::array<double, 2>>> alpha;
  std::vector<std::array<long, 2>> global_counts;
  std::vector<std::uint8_t> active;
};

double score_value(const Model& model, ScoreKind kind, std::span<const double> x,
                   int y);

// Squared kernel discrepancy between two score samples (V-statistic: full
// double sums including the diagonal).  Exact summation makes the value
// independent of sample order.
double mmd_squared(std::span<const double> s0, std::span<const double> s1,
                   const Kernel& kernel);

// As above for weighted empirical measures; each weight vector must be
// nonnegative and sum to 1.
double weighted_mmd_squared(std::span<const double> s0, std::span<const double> w0,
                            std::span<const double> s1, std::span<const double> w1,
                            const Kernel& kernel);

// C(z) = mean_{y in y0} k(z, y) - mean_{y in y1} k(z, y), and its derivative
// in z.
double c_function(double z, std::span<const double> y0, std::span<const double> y1,
                  const Kernel& kernel);
double c_prime(double z, std::span<const double> y0, std::span<const double> y1,
               const Kernel& kernel);

struct FairnessGradStats {
  long empty_subgroup_terms = 0;  // (a, j) subgroups missing from the batch
};

// Client fairness gradient over a minibatch:
//   sum_j 2 * [ alpha[j][0] * mean_{i in B, A=0, C_j} C'_j(S_i) dS_i/dtheta
//             - alpha[j][1] * mean_{i in B, A=1, C_j} C'_j(S_i) dS_i/dtheta ]
// with C'_j built from the broadcast score sets.  Subgroups absent from the
// batch contribute zero and are counted.  grad_out is overwritten.
FairnessGradStats grad_fk(const Model& model, const TabularDataset& data,
                          std::span<const int> batch, const FairnessSpec& spec,
                          std::span<const std::array<double, 2>> alpha_k,
                          const PredictionSets& sets, const Kernel& kernel,
                          std::span<double> grad_out);

// |P[1[h >= 1/2] = 1 | A=0] - P[... | A=1]| on one dataset.
double sp_unfairness(const Model& model, const TabularDataset& data);

// max over conditioning sets of the (non-squared) kernel discrepancy between
// group score samples on one dataset.
double mmd_unfairness(const Model& model, const TabularDataset& data,
                      const FairnessSpec& spec, const Kernel& kernel);

// Ascending score sample per (set, group) over the given rows.
std::vector<std::array<std::vector<double>, 2>> collect_scores(
    const Model& model, const TabularDataset& data, std::span<const int> rows,
    const FairnessSpec& spec);

// Two-client construction with swapped point-mass group laws: the group
// mixtures coincide (first value 0) while the weighted per-client
// discrepancy average stays bounded away from zero (second value), showing
// the global discrepancy is not a weighted sum of local ones.
struct DecompositionCheck {
  double mixture_discrepancy;  // squared, between pooled group mixtures
  double client_average;       // weighted average of per-client squared terms
};
DecompositionCheck decomposition_counterexample_check(const Kernel& kernel);

}  // namespace fedfair

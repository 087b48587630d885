#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace fedfair {

// Error-free accumulator for doubles (Shewchuk expansion, as in Python's
// math.fsum).  The running sum is held as non-overlapping partials whose
// exact sum equals the exact real sum of everything added, so the rounded
// result is independent of insertion order.  Group statistics computed
// through it are therefore bit-identical under sample permutations.
class ExactSum {
public:
  ExactSum() = default;

  void add(double x) {
    if (!std::isfinite(x)) {
      nonfinite_ += x;
      return;
    }
    std::size_t i = 0;
    for (std::size_t j = 0; j < count_; ++j) {
      double y = partials_[j];
      if (std::fabs(x) < std::fabs(y)) {
        double t = x;
        x = y;
        y = t;
      }
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    if (i >= kMaxPartials) throw std::overflow_error("ExactSum: partials overflow");
    partials_[i++] = x;
    count_ = i;
  }

  void add(std::span<const double> xs) {
    for (double x : xs) add(x);
  }

  // Correctly rounded value of the exact sum.
  double value() const {
    if (nonfinite_ != 0.0 || std::isnan(nonfinite_)) return nonfinite_;
    if (count_ == 0) return 0.0;
    // Sum from largest to smallest; resolve the half-ulp case by inspecting
    // the sign of the remaining tail, as fsum does.
    std::size_t n = count_;
    double x = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double y = x;
      const double p = partials_[--n];
      x = y + p;
      lo = p - (x - y);
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double z = x + y;
      if (y == z - x) x = z;
    }
    return x;
  }

  void reset() {
    count_ = 0;
    nonfinite_ = 0.0;
  }

private:
  // Non-overlapping partials span at most ~2098/53 binades; 64 is ample.
  static constexpr std::size_t kMaxPartials = 64;
  double partials_[kMaxPartials];
  std::size_t count_ = 0;
  double nonfinite_ = 0.0;
};

inline double exact_sum(std::span<const double> xs) {
  ExactSum s;
  s.add(xs);
  return s.value();
}

inline double exact_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("exact_mean: empty input");
  return exact_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace fedfair

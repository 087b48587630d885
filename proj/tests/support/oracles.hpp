// Reference implementations for tests: written straight from the definitions
// with none of the library's numerical machinery, so agreement is evidence
// rather than tautology.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

using ScalarKernel = std::function<double(double, double)>;

ScalarKernel gaussian(double gamma);
ScalarKernel laplacian(double scale);
ScalarKernel neg_distance();

// Plain double-loop V-statistic discrepancy, including diagonal terms.
double mmd2_naive(std::span<const double> a, std::span<const double> b,
                  const ScalarKernel& k);
double weighted_mmd2_naive(std::span<const double> a, std::span<const double> wa,
                           std::span<const double> b, std::span<const double> wb,
                           const ScalarKernel& k);

// C(z) = mean_a k(z, .) - mean_b k(z, .), naive loops.
double c_naive(double z, std::span<const double> a, std::span<const double> b,
               const ScalarKernel& k);

// Central finite differences of f at x.
std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double eps);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};
MeanSE mc_mean(std::span<const double> xs);

// Eigenvalues of a symmetric n x n matrix (row-major), cyclic Jacobi sweeps.
std::vector<double> sym_eigenvalues(std::vector<double> m, int n);

// Self-contained generator (xorshift64*); normal uses the Marsaglia polar
// method, deliberately a different algorithm from the library's.
class OracleRng {
public:
  explicit OracleRng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();
  double laplace(double scale);

private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace oracle

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fedfair {

// Scalar kernel on score pairs.  grad1 is the derivative in the first
// argument; kinked kernels return the subgradient 0 at x == y.
class Kernel {
public:
  virtual ~Kernel() = default;
  virtual double eval(double x, double y) const = 0;
  virtual double grad1(double x, double y) const = 0;
  // True when k(x, y) = v(x - y) with bounded v; this is the class closed
  // under noise convolution.
  virtual bool shift_invariant_bounded() const = 0;
  virtual bool is_distance_induced() const { return false; }
  virtual std::string describe() const = 0;
};

using KernelPtr = std::shared_ptr<const Kernel>;

class GaussianKernel final : public Kernel {
public:
  // amplitude * exp(-(x-y)^2 / (2 gamma^2)); amplitude 1 for the base
  // kernel, < 1 for noise-convolved variants.
  GaussianKernel(double gamma, double amplitude = 1.0);
  double eval(double x, double y) const override;
  double grad1(double x, double y) const override;
  bool shift_invariant_bounded() const override { return true; }
  std::string describe() const override;
  double gamma() const { return gamma_; }
  double amplitude() const { return amplitude_; }

private:
  double gamma_;
  double amplitude_;
};

class LaplacianKernel final : public Kernel {
public:
  explicit LaplacianKernel(double scale);
  double eval(double x, double y) const override;
  double grad1(double x, double y) const override;
  bool shift_invariant_bounded() const override { return true; }
  std::string describe() const override;
  double scale() const { return scale_; }

private:
  double scale_;
};

// k(x, y) = -|x - y|; conditionally positive definite, squared discrepancy
// equals the energy distance.
class DistanceKernel final : public Kernel {
public:
  double eval(double x, double y) const override;
  double grad1(double x, double y) const override;
  bool shift_invariant_bounded() const override { return false; }
  bool is_distance_induced() const override { return true; }
  std::string describe() const override { return "distance_induced"; }
};

KernelPtr make_gaussian(double gamma);
KernelPtr make_laplacian(double scale);
KernelPtr make_distance_induced();

struct NoiseSpec {
  enum class Kind { gaussian, laplace };
  Kind kind = Kind::gaussian;
  double scale = 0.0;
};

struct ConvolveOptions {
  enum class Mode { automatic, closed_form, monte_carlo };
  Mode mode = Mode::automatic;
  int n_samples = 20000;       // monte_carlo only
  std::uint64_t seed = 1234;   // monte_carlo only
};

// Noise-averaged kernel E_xi[k(x, y + xi)].  Closed form exists for a
// gaussian base with gaussian noise; other shift-invariant bounded bases
// fall back to a fixed-sample Monte Carlo average (symmetrised so the
// result stays a symmetric function).  Distance-induced bases are
// rejected: they are unbounded, so the convolution does not preserve the
// kernel class.
KernelPtr dp_convolve(const KernelPtr& base, const NoiseSpec& noise,
                      const ConvolveOptions& options = {});

// Monte-Carlo averaged kernel over a frozen noise sample.
class MonteCarloConvolvedKernel final : public Kernel {
public:
  MonteCarloConvolvedKernel(KernelPtr base, std::vector<double> noise);
  double eval(double x, double y) const override;
  double grad1(double x, double y) const override;
  bool shift_invariant_bounded() const override { return true; }
  std::string describe() const override;
  int n_samples() const { return static_cast<int>(noise_.size()); }

private:
  KernelPtr base_;
  std::vector<double> noise_;
};

}  // namespace fedfair

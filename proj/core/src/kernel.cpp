#include "fedfair/kernel.hpp"

#include <cmath>

#include "fedfair/errors.hpp"
#include "fedfair/rng.hpp"
#include "fedfair/summation.hpp"

namespace fedfair {

GaussianKernel::GaussianKernel(double gamma, double amplitude)
    : gamma_(gamma), amplitude_(amplitude) {
  if (!(gamma > 0.0)) throw ValidationError("GaussianKernel: gamma must be positive");
  if (!(amplitude > 0.0)) throw ValidationError("GaussianKernel: amplitude must be positive");
}

double GaussianKernel::eval(double x, double y) const {
  const double t = x - y;
  return amplitude_ * std::exp(-t * t / (2.0 * gamma_ * gamma_));
}

double GaussianKernel::grad1(double x, double y) const {
  const double t = x - y;
  return -(t / (gamma_ * gamma_)) * eval(x, y);
}

std::string GaussianKernel::describe() const {
  return "gaussian(gamma=" + std::to_string(gamma_) +
         (amplitude_ == 1.0 ? std::string() : ", amplitude=" + std::to_string(amplitude_)) + ")";
}

LaplacianKernel::LaplacianKernel(double scale) : scale_(scale) {
  if (!(scale > 0.0)) throw ValidationError("LaplacianKernel: scale must be positive");
}

double LaplacianKernel::eval(double x, double y) const {
  return std::exp(-std::fabs(x - y) / scale_);
}

double LaplacianKernel::grad1(double x, double y) const {
  if (x == y) return 0.0;  // subgradient at the kink
  const double s = x > y ? 1.0 : -1.0;
  return -(s / scale_) * eval(x, y);
}

std::string LaplacianKernel::describe() const {
  return "laplacian(scale=" + std::to_string(scale_) + ")";
}

double DistanceKernel::eval(double x, double y) const { return -std::fabs(x - y); }

double DistanceKernel::grad1(double x, double y) const {
  if (x == y) return 0.0;  // subgradient at the kink
  return x > y ? -1.0 : 1.0;
}

KernelPtr make_gaussian(double gamma) {
  return std::make_shared<GaussianKernel>(gamma);
}

KernelPtr make_laplacian(double scale) {
  return std::make_shared<LaplacianKernel>(scale);
}

KernelPtr make_distance_induced() { return std::make_shared<DistanceKernel>(); }

MonteCarloConvolvedKernel::MonteCarloConvolvedKernel(KernelPtr base,
                                                     std::vector<double> noise)
    : base_(std::move(base)), noise_(std::move(noise)) {
  if (noise_.empty())
    throw ValidationError("MonteCarloConvolvedKernel: empty noise sample");
}

double MonteCarloConvolvedKernel::eval(double x, double y) const {
  ExactSum sum;
  for (double xi : noise_)
    sum.add(0.5 * (base_->eval(x, y + xi) + base_->eval(y, x + xi)));
  return sum.value() / static_cast<double>(noise_.size());
}

double MonteCarloConvolvedKernel::grad1(double x, double y) const {
  ExactSum sum;
  for (double xi : noise_)
    sum.add(0.5 * (base_->grad1(x, y + xi) + base_->grad1(x + xi, y)));
  return sum.value() / static_cast<double>(noise_.size());
}

std::string MonteCarloConvolvedKernel::describe() const {
  return "monte_carlo_convolved(" + base_->describe() +
         ", n=" + std::to_string(noise_.size()) + ")";
}

KernelPtr dp_convolve(const KernelPtr& base, const NoiseSpec& noise,
                      const ConvolveOptions& options) {
  if (!base) throw ValidationError("dp_convolve: null base kernel");
  if (!base->shift_invariant_bounded())
    throw ValidationError("dp_convolve: base kernel must be shift-invariant and bounded; '" +
                          base->describe() + "' is not");
  if (noise.scale < 0.0) throw ValidationError("dp_convolve: noise scale must be >= 0");
  if (noise.scale == 0.0) return base;

  const auto* gaussian_base = dynamic_cast<const GaussianKernel*>(base.get());
  const bool closed_form_available =
      gaussian_base != nullptr && noise.kind == NoiseSpec::Kind::gaussian;

  const bool use_closed_form =
      options.mode == ConvolveOptions::Mode::closed_form ||
      (options.mode == ConvolveOptions::Mode::automatic && closed_form_available);

  if (use_closed_form) {
    if (!closed_form_available)
      throw ValidationError("dp_convolve: no closed form for '" + base->describe() +
                            "' with this noise kind");
    // gamma / sqrt(gamma^2 + s^2) * exp(-(x-y)^2 / (2 (gamma^2 + s^2)))
    const double g = gaussian_base->gamma();
    const double s = noise.scale;
    const double widened = std::sqrt(g * g + s * s);
    const double amplitude = gaussian_base->amplitude() * (g / widened);
    return std::make_shared<GaussianKernel>(widened, amplitude);
  }

  if (options.n_samples < 1)
    throw ValidationError("dp_convolve: n_samples must be >= 1");
  auto rng = RngStream::derive(options.seed, StreamId::mc);
  std::vector<double> draws(static_cast<std::size_t>(options.n_samples));
  for (auto& d : draws)
    d = noise.kind == NoiseSpec::Kind::gaussian ? noise.scale * rng.normal()
                                                : rng.laplace(noise.scale);
  return std::make_shared<MonteCarloConvolvedKernel>(base, std::move(draws));
}

}  // namespace fedfair

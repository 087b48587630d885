#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "fedfair/errors.hpp"
#include "fedfair/kernel.hpp"
#include "oracles.hpp"

using namespace fedfair;

namespace {

double fd_grad1(const Kernel& k, double x, double y) {
  const std::vector<double> at{x};
  const auto f = [&](std::span<const double> t) { return k.eval(t[0], y); };
  return oracle::fd_gradient(f, at, 1e-6)[0];
}

double min_gram_eigenvalue(const Kernel& k, const std::vector<double>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<double> gram(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram[static_cast<std::size_t>(i) * n + j] = k.eval(pts[i], pts[j]);
  const std::vector<double> eig = oracle::sym_eigenvalues(gram, n);
  double lo = eig[0];
  for (double e : eig) lo = std::min(lo, e);
  return lo;
}

}  // namespace

TEST_CASE("gaussian kernel values and gradient") {
  GaussianKernel k(1.0);
  CHECK(k.eval(1.0, 0.0) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(k.eval(0.0, 1.0) == k.eval(1.0, 0.0));
  CHECK(k.eval(2.5, 2.5) == 1.0);
  CHECK(k.grad1(1.0, 0.0) == doctest::Approx(-0.6065306597126334).epsilon(1e-15));
  CHECK(k.grad1(0.0, 1.0) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(k.grad1(2.5, 2.5) == 0.0);
  CHECK(k.shift_invariant_bounded());
  CHECK_FALSE(k.is_distance_induced());
  CHECK(k.describe().find("gaussian") != std::string::npos);

  GaussianKernel wide(2.0);
  for (double x : {-1.3, 0.0, 0.7, 2.9})
    CHECK(wide.grad1(x, 0.4) == doctest::Approx(fd_grad1(wide, x, 0.4)).epsilon(1e-6));

  CHECK_THROWS_AS(GaussianKernel(0.0), ValidationError);
  CHECK_THROWS_AS(GaussianKernel(-1.0), ValidationError);
  CHECK_THROWS_AS(GaussianKernel(1.0, 0.0), ValidationError);
}

TEST_CASE("laplacian kernel values and gradient") {
  LaplacianKernel k(2.0);
  CHECK(k.eval(0.0, 2.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(k.eval(2.0, 0.0) == k.eval(0.0, 2.0));
  CHECK(k.eval(1.5, 1.5) == 1.0);
  // x < y: d/dx exp(-(y-x)/s) = (1/s) exp(-1)
  CHECK(k.grad1(0.0, 2.0) == doctest::Approx(0.18393972058572116).epsilon(1e-15));
  CHECK(k.grad1(2.0, 0.0) == doctest::Approx(-0.18393972058572116).epsilon(1e-15));
  CHECK(k.grad1(0.7, 0.7) == 0.0);  // subgradient at the kink
  CHECK(k.shift_invariant_bounded());
  CHECK_FALSE(k.is_distance_induced());
  CHECK(k.describe().find("laplacian") != std::string::npos);

  for (double x : {-2.0, -0.5, 1.1, 3.0})
    CHECK(k.grad1(x, 0.25) == doctest::Approx(fd_grad1(k, x, 0.25)).epsilon(1e-6));

  CHECK_THROWS_AS(LaplacianKernel(0.0), ValidationError);
}

TEST_CASE("distance-induced kernel values and gradient") {
  DistanceKernel k;
  CHECK(k.eval(0.0, 2.0) == -2.0);
  CHECK(k.eval(2.0, 0.0) == -2.0);
  CHECK(k.eval(1.25, 1.25) == 0.0);
  CHECK(k.grad1(3.0, 1.0) == -1.0);
  CHECK(k.grad1(1.0, 3.0) == 1.0);
  CHECK(k.grad1(0.5, 0.5) == 0.0);  // subgradient at the kink
  CHECK_FALSE(k.shift_invariant_bounded());
  CHECK(k.is_distance_induced());

  for (double x : {-1.0, 0.5, 2.0})
    CHECK(k.grad1(x, -0.25) == doctest::Approx(fd_grad1(k, x, -0.25)).epsilon(1e-6));
}

TEST_CASE("kernel gradients agree with the reference on a grid") {
  const std::vector<double> xs{-1.7, -0.3, 0.0, 0.9, 2.4};
  const std::vector<double> ys{-0.8, 0.55, 1.9};
  GaussianKernel g(0.7);
  LaplacianKernel l(1.3);
  for (double x : xs)
    for (double y : ys) {
      CHECK(g.grad1(x, y) == doctest::Approx(fd_grad1(g, x, y)).epsilon(1e-5));
      CHECK(l.grad1(x, y) == doctest::Approx(fd_grad1(l, x, y)).epsilon(1e-5));
    }
}

TEST_CASE("factories produce matching kernels") {
  CHECK(make_gaussian(1.5)->eval(0.0, 1.5) == GaussianKernel(1.5).eval(0.0, 1.5));
  CHECK(make_laplacian(0.5)->eval(0.0, 1.0) == LaplacianKernel(0.5).eval(0.0, 1.0));
  CHECK(make_distance_induced()->eval(4.0, 1.0) == -3.0);
}

TEST_CASE("gram matrices of the smooth kernels are positive semidefinite") {
  const std::vector<double> pts{-2.1, -1.0, -0.4, 0.0, 0.3, 0.31, 1.7, 2.2};
  CHECK(min_gram_eigenvalue(GaussianKernel(1.0), pts) >= -1e-10);
  CHECK(min_gram_eigenvalue(GaussianKernel(0.2), pts) >= -1e-10);
  CHECK(min_gram_eigenvalue(LaplacianKernel(0.8), pts) >= -1e-10);
}

TEST_CASE("noise convolution has the gaussian closed form") {
  const KernelPtr base = make_gaussian(1.0);
  const KernelPtr k = dp_convolve(base, {NoiseSpec::Kind::gaussian, 1.0});
  const auto* g = dynamic_cast<const GaussianKernel*>(k.get());
  REQUIRE(g != nullptr);
  CHECK(g->gamma() == doctest::Approx(1.4142135623730951).epsilon(1e-15));
  CHECK(g->amplitude() == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK(k->eval(0.3, 0.3) == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK(k->eval(1.0, 0.0) ==
        doctest::Approx(0.7071067811865476 * std::exp(-0.25)).epsilon(1e-14));
  // convolving twice widens twice
  const KernelPtr k2 = dp_convolve(k, {NoiseSpec::Kind::gaussian, 1.0});
  const auto* g2 = dynamic_cast<const GaussianKernel*>(k2.get());
  REQUIRE(g2 != nullptr);
  CHECK(g2->gamma() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("zero noise scale returns the base kernel unchanged") {
  const KernelPtr base = make_laplacian(1.0);
  const KernelPtr same = dp_convolve(base, {NoiseSpec::Kind::gaussian, 0.0});
  CHECK(same.get() == base.get());
}

TEST_CASE("convolution rejects bad inputs") {
  CHECK_THROWS_AS(dp_convolve(nullptr, {NoiseSpec::Kind::gaussian, 1.0}), ValidationError);
  CHECK_THROWS_AS(
      dp_convolve(make_distance_induced(), {NoiseSpec::Kind::gaussian, 1.0}),
      ValidationError);
  CHECK_THROWS_AS(dp_convolve(make_gaussian(1.0), {NoiseSpec::Kind::gaussian, -0.5}),
                  ValidationError);
  ConvolveOptions closed;
  closed.mode = ConvolveOptions::Mode::closed_form;
  CHECK_THROWS_AS(dp_convolve(make_laplacian(1.0), {NoiseSpec::Kind::gaussian, 1.0}, closed),
                  ValidationError);
  CHECK_THROWS_AS(dp_convolve(make_gaussian(1.0), {NoiseSpec::Kind::laplace, 1.0}, closed),
                  ValidationError);
  ConvolveOptions tiny;
  tiny.mode = ConvolveOptions::Mode::monte_carlo;
  tiny.n_samples = 0;
  CHECK_THROWS_AS(dp_convolve(make_gaussian(1.0), {NoiseSpec::Kind::gaussian, 1.0}, tiny),
                  ValidationError);
}

TEST_CASE("monte carlo convolution averages the frozen noise sample") {
  const KernelPtr base = make_laplacian(1.0);
  const MonteCarloConvolvedKernel k(base, std::vector<double>{0.5, -0.5});
  // mean over xi of (k(x, y+xi) + k(y, x+xi)) / 2 at x=0, y=1
  const double expected = 0.5 * (std::exp(-0.5) + std::exp(-1.5));
  CHECK(k.eval(0.0, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(k.eval(0.0, 1.0) == k.eval(1.0, 0.0));
  CHECK(k.n_samples() == 2);
  CHECK(k.shift_invariant_bounded());
  CHECK(k.describe().find("monte_carlo") != std::string::npos);
  CHECK_THROWS_AS(MonteCarloConvolvedKernel(base, std::vector<double>{}), ValidationError);
}

TEST_CASE("monte carlo convolution is symmetric and deterministic") {
  const KernelPtr base = make_laplacian(0.8);
  ConvolveOptions mc;
  mc.mode = ConvolveOptions::Mode::monte_carlo;
  mc.n_samples = 4000;
  mc.seed = 7;
  const KernelPtr k = dp_convolve(base, {NoiseSpec::Kind::laplace, 0.3}, mc);
  CHECK(k->eval(1.3, -0.4) == k->eval(-0.4, 1.3));
  const KernelPtr again = dp_convolve(base, {NoiseSpec::Kind::laplace, 0.3}, mc);
  CHECK(k->eval(0.2, 0.9) == again->eval(0.2, 0.9));
  mc.seed = 8;
  const KernelPtr other = dp_convolve(base, {NoiseSpec::Kind::laplace, 0.3}, mc);
  CHECK(k->eval(0.2, 0.9) != other->eval(0.2, 0.9));
}

TEST_CASE("monte carlo convolution approaches the closed form") {
  ConvolveOptions mc;
  mc.mode = ConvolveOptions::Mode::monte_carlo;
  mc.n_samples = 40000;
  mc.seed = 11;
  const KernelPtr base = make_gaussian(1.0);
  const NoiseSpec noise{NoiseSpec::Kind::gaussian, 0.5};
  const KernelPtr approx = dp_convolve(base, noise, mc);
  const KernelPtr exact = dp_convolve(base, noise);
  for (double x : {-1.0, 0.0, 0.4})
    for (double y : {-0.6, 0.2, 1.3})
      CHECK(approx->eval(x, y) == doctest::Approx(exact->eval(x, y)).epsilon(0.02));
}

TEST_CASE("gaussian-with-gaussian-noise convolution stays positive semidefinite") {
  const KernelPtr k = dp_convolve(make_gaussian(0.6), {NoiseSpec::Kind::gaussian, 0.9});
  const std::vector<double> pts{-1.8, -0.9, -0.2, 0.05, 0.4, 1.1, 2.6};
  CHECK(min_gram_eigenvalue(*k, pts) >= -1e-10);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fedfair/dataset.hpp"
#include "fedfair/errors.hpp"
#include "fedfair/model.hpp"
#include "fedfair/rng.hpp"
#include "oracles.hpp"

using namespace fedfair;

namespace {

TabularDataset random_table(int n, int d, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x;
  std::vector<std::uint8_t> y, a;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x.push_back(rng.normal());
    y.push_back(rng.uniform() < 0.5 ? 0 : 1);
    a.push_back(rng.uniform() < 0.5 ? 0 : 1);
  }
  return TabularDataset(d, std::move(x), std::move(y), std::move(a));
}

std::vector<int> all_rows(const TabularDataset& ds) {
  std::vector<int> rows(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

}  // namespace

TEST_CASE("logistic forward pass") {
  Model m = Model::logistic(2);
  m.set_theta(std::vector<double>{1.0, 2.0, 0.5});
  const std::vector<double> x{2.0, -0.5};
  // z = 2 - 1 + 0.5 = 1.5
  CHECK(m.predict(x) == doctest::Approx(0.8175744761936437).epsilon(1e-15));
  CHECK(m.param_count() == 3);
}

TEST_CASE("mlp forward pass with a dead unit") {
  Model m = Model::mlp(2, 2);
  REQUIRE(m.param_count() == 2 * 2 + 2 + 2 + 1);
  // W1 = I, b1 = (0.5, -0.5), w2 = (1, 1), b2 = 0.25
  m.set_theta(std::vector<double>{1.0, 0.0, 0.0, 1.0, 0.5, -0.5, 1.0, 1.0, 0.25});
  const std::vector<double> x{0.5, 0.2};
  // z1 = (1.0, -0.3) -> relu -> (1.0, 0); z2 = 1.25
  const double expected = 1.0 / (1.0 + std::exp(-1.25));
  CHECK(m.predict(x) == doctest::Approx(expected).epsilon(1e-15));

  std::vector<double> lg(m.param_count(), -7.0);
  const double h = m.predict_logit_grad(x, lg);
  CHECK(h == doctest::Approx(expected).epsilon(1e-15));
  // dead unit (second) contributes nothing: dW1 row 2, db1_2, and dw2_2 = relu(z1_2) = 0
  CHECK(lg[2] == 0.0);
  CHECK(lg[3] == 0.0);
  CHECK(lg[5] == 0.0);
  CHECK(lg[7] == 0.0);
  CHECK(lg[8] == 1.0);  // bias of the output unit
  // live unit: dW1 row 1 = w2_1 * x, db1_1 = w2_1, dw2_1 = relu(z1_1)
  CHECK(lg[0] == doctest::Approx(0.5));
  CHECK(lg[1] == doctest::Approx(0.2));
  CHECK(lg[4] == doctest::Approx(1.0));
  CHECK(lg[6] == doctest::Approx(1.0));
}

TEST_CASE("prediction gradients match finite differences") {
  for (const bool use_mlp : {false, true}) {
    CAPTURE(use_mlp);
    const int d = 3;
    Model m = use_mlp ? Model::mlp(d, 4) : Model::logistic(d);
    RngStream rng(31);
    m.init_params(rng);
    const std::vector<double> x{0.3, -1.2, 0.8};

    std::vector<double> grad(m.param_count());
    m.predict_with_grad(x, grad);

    Model probe = m;
    const auto f = [&](std::span<const double> theta) {
      probe.set_theta(theta);
      return probe.predict(x);
    };
    const std::vector<double> fd = oracle::fd_gradient(f, m.theta(), 1e-6);
    for (std::size_t i = 0; i < grad.size(); ++i)
      CHECK(grad[i] == doctest::Approx(fd[i]).epsilon(1e-5));
  }
}

TEST_CASE("sample_loss values and clamping") {
  CHECK(Model::sample_loss(0.8, 1) == doctest::Approx(0.2231435513142097).epsilon(1e-15));
  CHECK(Model::sample_loss(0.2, 0) == doctest::Approx(0.2231435513142097).epsilon(1e-12));
  // fully wrong predictions are clamped at 1e-7
  CHECK(Model::sample_loss(0.0, 1) == doctest::Approx(16.11809565095832).epsilon(1e-12));
  // the y = 0 side clamps h to 1 - 1e-7, and 1 - (1 - 1e-7) is a hair above
  // 1e-7 in doubles, so the two saturated losses differ past the 9th digit
  CHECK(Model::sample_loss(1.0, 0) == doctest::Approx(16.118095651484676).epsilon(1e-12));
  CHECK(std::isfinite(Model::sample_loss(0.0, 1)));
}

TEST_CASE("loss gradients match finite differences") {
  for (const bool use_mlp : {false, true}) {
    CAPTURE(use_mlp);
    const int d = 4;
    Model m = use_mlp ? Model::mlp(d, 3) : Model::logistic(d);
    RngStream rng(37);
    m.init_params(rng);
    const TabularDataset ds = random_table(25, d, 41);
    const std::vector<int> rows = all_rows(ds);

    std::vector<double> grad(m.param_count());
    const double loss = grad_task_loss(m, ds, rows, grad);
    CHECK(loss == doctest::Approx(task_loss(m, ds, rows)).epsilon(1e-15));

    Model probe = m;
    const auto f = [&](std::span<const double> theta) {
      probe.set_theta(theta);
      return task_loss(probe, ds, rows);
    };
    const std::vector<double> fd = oracle::fd_gradient(f, m.theta(), 1e-6);
    for (std::size_t i = 0; i < grad.size(); ++i)
      CHECK(grad[i] == doctest::Approx(fd[i]).epsilon(2e-5));
  }
}

TEST_CASE("task loss and gradient are bit-identical under row permutations") {
  const TabularDataset ds = random_table(40, 3, 43);
  Model m = Model::logistic(3);
  RngStream rng(47);
  m.init_params(rng);
  std::vector<int> rows = all_rows(ds);
  std::vector<double> g1(m.param_count()), g2(m.param_count());
  const double l1 = grad_task_loss(m, ds, rows, g1);
  RngStream shuffler(53);
  shuffler.shuffle(rows);
  const double l2 = grad_task_loss(m, ds, rows, g2);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("init_params respects layer fan-in bounds and the stream") {
  Model m = Model::mlp(9, 4);
  RngStream rng = RngStream::derive(5, StreamId::init);
  m.init_params(rng);
  const auto theta = m.theta();
  const double b1 = 1.0 / std::sqrt(9.0);
  const double b2 = 1.0 / std::sqrt(4.0);
  // layer 1 block: W1 (36) + b1 (4)
  for (std::size_t i = 0; i < 40; ++i) CHECK(std::fabs(theta[i]) <= b1);
  for (std::size_t i = 40; i < 45; ++i) CHECK(std::fabs(theta[i]) <= b2);

  Model m2 = Model::mlp(9, 4);
  RngStream rng2 = RngStream::derive(5, StreamId::init);
  m2.init_params(rng2);
  CHECK(std::vector<double>(theta.begin(), theta.end()) ==
        std::vector<double>(m2.theta().begin(), m2.theta().end()));
}

TEST_CASE("save and load round-trip bit-exactly") {
  Model m = Model::mlp(5, 3);
  RngStream rng(59);
  m.init_params(rng);

  std::stringstream buf;
  m.save(buf);
  const Model back = Model::load(buf);
  CHECK(back.arch() == m.arch());
  CHECK(back.input_dim() == 5);
  CHECK(back.hidden() == 3);
  REQUIRE(back.param_count() == m.param_count());
  for (std::size_t i = 0; i < m.param_count(); ++i)
    CHECK(back.theta()[i] == m.theta()[i]);

  const std::string path = "/tmp/fedfair_test_model.bin";
  m.save_file(path);
  const Model back2 = Model::load_file(path);
  CHECK(back2.theta()[0] == m.theta()[0]);
  std::remove(path.c_str());
}

TEST_CASE("load rejects garbage") {
  std::stringstream bad("not a model at all");
  CHECK_THROWS_AS(Model::load(bad), ValidationError);

  Model m = Model::logistic(2);
  std::stringstream buf;
  m.save(buf);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 5);  // truncate
  std::stringstream cut(bytes);
  CHECK_THROWS_AS(Model::load(cut), ValidationError);
}

TEST_CASE("apply_sgd_step ignores the fairness direction at lambda zero") {
  std::vector<double> theta{1.0, 2.0};
  const std::vector<double> gt{0.5, -0.5};
  const std::vector<double> gf{std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN()};
  apply_sgd_step(theta, 0.1, gt, 0.0, gf);
  CHECK(theta[0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(theta[1] == doctest::Approx(2.05).epsilon(1e-15));

  const std::vector<double> gf2{1.0, -1.0};
  apply_sgd_step(theta, 0.1, gt, 2.0, gf2);
  // theta -= 0.1 * (gt + 2 * gf2)
  CHECK(theta[0] == doctest::Approx(0.95 - 0.1 * 2.5).epsilon(1e-14));
  CHECK(theta[1] == doctest::Approx(2.05 + 0.1 * 2.5).epsilon(1e-14));
}

TEST_CASE("set_theta validates the size") {
  Model m = Model::logistic(2);
  CHECK_THROWS_AS(m.set_theta(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("empty batch is rejected") {
  const TabularDataset ds = random_table(5, 2, 61);
  Model m = Model::logistic(2);
  RngStream rng(67);
  m.init_params(rng);
  const std::vector<int> none;
  CHECK_THROWS(task_loss(m, ds, none));
}

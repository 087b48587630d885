#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedfair/dataset.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

enum class Arch { logistic, mlp };

std::string arch_to_string(Arch a);
Arch arch_from_string(const std::string& s);

// Binary scorer h(x) in (0, 1) with a flat parameter vector.
//   logistic: sigmoid(w.x + b), theta = [w, b]
//   mlp:      sigmoid(w2.relu(W1 x + b1) + b2), one hidden layer,
//             theta = [W1 row-per-unit, b1, w2, b2]
class Model {
public:
  Model() = default;  // empty placeholder; assign a real model before use
  static Model logistic(int input_dim);
  static Model mlp(int input_dim, int hidden);

  Arch arch() const { return arch_; }
  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  std::size_t param_count() const { return theta_.size(); }

  std::span<const double> theta() const { return theta_; }
  std::span<double> theta() { return theta_; }
  void set_theta(std::span<const double> t);

  // Layer-wise uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
  void init_params(RngStream& rng);

  double predict(std::span<const double> x) const;

  // Prediction plus the gradient of the pre-sigmoid output; the returned
  // value is h = sigmoid(z).  dh/dtheta = h(1-h) * logit_grad, and the
  // cross-entropy gradient is (h - y) * logit_grad.
  double predict_logit_grad(std::span<const double> x,
                            std::span<double> logit_grad) const;

  // dh/dtheta.
  double predict_with_grad(std::span<const double> x, std::span<double> grad) const;

  // Cross-entropy of one sample with the prediction clamped to
  // [kProbClamp, 1 - kProbClamp] inside the logs.
  static double sample_loss(double h, int y);

  // Per-sample loss value and gradient (sigmoid/cross-entropy composite).
  double sample_loss_with_grad(std::span<const double> x, int y,
                               std::span<double> grad) const;

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static Model load(std::istream& in);
  static Model load_file(const std::string& path);

  static constexpr double kProbClamp = 1e-7;

private:
  Model(Arch arch, int input_dim, int hidden);

  Arch arch_ = Arch::logistic;
  int input_dim_ = 0;
  int hidden_ = 0;
  std::vector<double> theta_;
};

// Mean clamped cross-entropy over the given rows.
double task_loss(const Model& model, const TabularDataset& data,
                 std::span<const int> rows);

// Mean cross-entropy gradient over the given rows (exact summation, so the
// result is independent of row order).  Returns the mean loss.
double grad_task_loss(const Model& model, const TabularDataset& data,
                      std::span<const int> rows, std::span<double> grad);

// theta <- theta - step * (g_task + lambda * g_fair); the lambda term is
// skipped entirely when lambda == 0 so that a zero-weight fairness path is
// bit-identical to no fairness path.
void apply_sgd_step(std::span<double> theta, double step,
                    std::span<const double> g_task, double lambda,
                    std::span<const double> g_fair);

}  // namespace fedfair

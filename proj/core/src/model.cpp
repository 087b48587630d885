#include "fedfair/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fedfair/errors.hpp"
#include "fedfair/summation.hpp"

namespace fedfair {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ValidationError("model checkpoint: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw ValidationError("model checkpoint: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kMagic[4] = {'F', 'F', 'M', '1'};

}  // namespace

std::string arch_to_string(Arch a) {
  return a == Arch::logistic ? "logistic" : "mlp";
}

Arch arch_from_string(const std::string& s) {
  if (s == "logistic") return Arch::logistic;
  if (s == "mlp") return Arch::mlp;
  throw ConfigError("unknown model architecture '" + s + "'");
}

Model::Model(Arch arch, int input_dim, int hidden)
    : arch_(arch), input_dim_(input_dim), hidden_(hidden) {
  if (input_dim < 1) throw ValidationError("Model: input_dim must be >= 1");
  if (arch == Arch::mlp && hidden < 1) throw ValidationError("Model: hidden must be >= 1");
  const std::size_t d = static_cast<std::size_t>(input_dim);
  const std::size_t h = static_cast<std::size_t>(hidden);
  theta_.assign(arch == Arch::logistic ? d + 1 : h * d + h + h + 1, 0.0);
}

Model Model::logistic(int input_dim) { return Model(Arch::logistic, input_dim, 0); }

Model Model::mlp(int input_dim, int hidden) { return Model(Arch::mlp, input_dim, hidden); }

void Model::set_theta(std::span<const double> t) {
  if (t.size() != theta_.size()) throw ValidationError("Model::set_theta: size mismatch");
  std::copy(t.begin(), t.end(), theta_.begin());
}

void Model::init_params(RngStream& rng) {
  auto draw = [&](double bound) { return (2.0 * rng.uniform() - 1.0) * bound; };
  if (arch_ == Arch::logistic) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim_));
    for (auto& t : theta_) t = draw(bound);
    return;
  }
  const std::size_t d = static_cast<std::size_t>(input_dim_);
  const std::size_t h = static_cast<std::size_t>(hidden_);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(input_dim_));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  std::size_t i = 0;
  for (; i < h * d + h; ++i) theta_[i] = draw(b1);
  for (; i < theta_.size(); ++i) theta_[i] = draw(b2);
}

double Model::predict(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(input_dim_))
    throw ValidationError("Model::predict: feature dim mismatch");
  const std::size_t d = static_cast<std::size_t>(input_dim_);
  if (arch_ == Arch::logistic) {
    double z = theta_[d];
    for (std::size_t j = 0; j < d; ++j) z += theta_[j] * x[j];
    return sigmoid(z);
  }
  const std::size_t h = static_cast<std::size_t>(hidden_);
  const double* w1 = theta_.data();
  const double* b1 = theta_.data() + h * d;
  const double* w2 = theta_.data() + h * d + h;
  const double b2 = theta_[h * d + h + h];
  double z2 = b2;
  for (std::size_t u = 0; u < h; ++u) {
    double z1 = b1[u];
    const double* row = w1 + u * d;
    for (std::size_t j = 0; j < d; ++j) z1 += row[j] * x[j];
    if (z1 > 0.0) z2 += w2[u] * z1;
  }
  return sigmoid(z2);
}

double Model::predict_logit_grad(std::span<const double> x,
                                 std::span<double> logit_grad) const {
  if (x.size() != static_cast<std::size_t>(input_dim_))
    throw ValidationError("Model::predict_logit_grad: feature dim mismatch");
  if (logit_grad.size() != theta_.size())
    throw ValidationError("Model::predict_logit_grad: gradient size mismatch");
  const std::size_t d = static_cast<std::size_t>(input_dim_);
  if (arch_ == Arch::logistic) {
    double z = theta_[d];
    for (std::size_t j = 0; j < d; ++j) {
      z += theta_[j] * x[j];
      logit_grad[j] = x[j];
    }
    logit_grad[d] = 1.0;
    return sigmoid(z);
  }
  const std::size_t h = static_cast<std::size_t>(hidden_);
  const double* w1 = theta_.data();
  const double* b1 = theta_.data() + h * d;
  const double* w2 = theta_.data() + h * d + h;
  const double b2 = theta_[h * d + h + h];
  double z2 = b2;
  for (std::size_t u = 0; u < h; ++u) {
    double z1 = b1[u];
    const double* row = w1 + u * d;
    for (std::size_t j = 0; j < d; ++j) z1 += row[j] * x[j];
    double* grow = logit_grad.data() + u * d;
    if (z1 > 0.0) {
      z2 += w2[u] * z1;
      const double g = w2[u];  // dz2/dz1[u]; relu derivative is 1 here
      for (std::size_t j = 0; j < d; ++j) grow[j] = g * x[j];
      logit_grad[h * d + u] = g;
      logit_grad[h * d + h + u] = z1;  // dz2/dw2[u] = relu(z1)
    } else {
      for (std::size_t j = 0; j < d; ++j) grow[j] = 0.0;
      logit_grad[h * d + u] = 0.0;
      logit_grad[h * d + h + u] = 0.0;
    }
  }
  logit_grad[h * d + h + h] = 1.0;
  return sigmoid(z2);
}

double Model::predict_with_grad(std::span<const double> x,
                                std::span<double> grad) const {
  const double h = predict_logit_grad(x, grad);
  const double s = h * (1.0 - h);
  for (auto& g : grad) g *= s;
  return h;
}

double Model::sample_loss(double h, int y) {
  const double c = std::clamp(h, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(c) : -std::log1p(-c);
}

double Model::sample_loss_with_grad(std::span<const double> x, int y,
                                    std::span<double> grad) const {
  const double h = predict_logit_grad(x, grad);
  const double r = h - static_cast<double>(y);
  for (auto& g : grad) g *= r;
  return sample_loss(h, y);
}

double task_loss(const Model& model, const TabularDataset& data,
                 std::span<const int> rows) {
  if (rows.empty()) throw ValidationError("task_loss: empty batch");
  ExactSum sum;
  for (int i : rows) sum.add(Model::sample_loss(model.predict(data.row(i)), data.label(i)));
  return sum.value() / static_cast<double>(rows.size());
}

double grad_task_loss(const Model& model, const TabularDataset& data,
                      std::span<const int> rows, std::span<double> grad) {
  if (rows.empty()) throw ValidationError("grad_task_loss: empty batch");
  if (grad.size() != model.param_count())
    throw ValidationError("grad_task_loss: gradient size mismatch");
  const std::size_t p = grad.size();
  std::vector<ExactSum> acc(p);
  std::vector<double> g(p);
  ExactSum loss;
  for (int i : rows) {
    loss.add(model.sample_loss_with_grad(data.row(i), data.label(i), g));
    for (std::size_t c = 0; c < p; ++c) acc[c].add(g[c]);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (std::size_t c = 0; c < p; ++c) grad[c] = acc[c].value() * inv;
  return loss.value() * inv;
}

void apply_sgd_step(std::span<double> theta, double step,
                    std::span<const double> g_task, double lambda,
                    std::span<const double> g_fair) {
  if (lambda == 0.0) {
    for (std::size_t c = 0; c < theta.size(); ++c) theta[c] -= step * g_task[c];
    return;
  }
  for (std::size_t c = 0; c < theta.size(); ++c)
    theta[c] -= step * (g_task[c] + lambda * g_fair[c]);
}

void Model::save(std::ostream& out) const {
  out.write(kMagic, 4);
  write_u32(out, arch_ == Arch::logistic ? 0u : 1u);
  write_u32(out, static_cast<std::uint32_t>(input_dim_));
  write_u32(out, static_cast<std::uint32_t>(hidden_));
  write_u64(out, static_cast<std::uint64_t>(theta_.size()));
  for (double t : theta_) write_u64(out, std::bit_cast<std::uint64_t>(t));
  if (!out) throw ValidationError("model checkpoint: write failed");
}

void Model::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("model checkpoint: cannot open '" + path + "' for writing");
  save(out);
}

Model Model::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ValidationError("model checkpoint: bad magic");
  const std::uint32_t arch_tag = read_u32(in);
  if (arch_tag > 1) throw ValidationError("model checkpoint: unknown architecture tag");
  const auto input_dim = static_cast<int>(read_u32(in));
  const auto hidden = static_cast<int>(read_u32(in));
  const std::uint64_t count = read_u64(in);
  Model m = arch_tag == 0 ? Model::logistic(input_dim) : Model::mlp(input_dim, hidden);
  if (count != m.param_count())
    throw ValidationError("model checkpoint: parameter count mismatch");
  for (auto& t : m.theta_) {
    t = std::bit_cast<double>(read_u64(in));
  }
  return m;
}

Model Model::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("model checkpoint: cannot open '" + path + "'");
  return load(in);
}

}  // namespace fedfair

// SPDX-License-Identifier: Apache-2.0
#include "qfed/qnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "qfed/error.hpp"
#include "qfed/terngrad.hpp"

namespace qfed::qnn {

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;

void check_config(const ModelConfig& cfg) {
  if (cfg.n_qubits < 1 || cfg.n_qubits > qsim::kMaxQubits)
    throw Error("model qubit count out of range");
  if (cfg.layers < 1) throw Error("model needs at least one layer");
  if (cfg.n_classes < 1 || cfg.n_classes > cfg.n_qubits)
    throw Error("class count must be in [1, n_qubits]");
}

void check_shapes(const ModelConfig& cfg, const std::vector<double>& x,
                  const std::vector<double>& theta) {
  check_config(cfg);
  if (x.size() != std::size_t(cfg.n_qubits))
    throw Error("feature vector length does not match qubit count");
  if (theta.size() != std::size_t(param_count(cfg)))
    throw Error("parameter vector length does not match model");
}

// Evaluates f at theta with one coordinate shifted by +-pi/2 and returns
// the half difference. Exact for our rotation-generated parameters.
template <typename F>
auto shift_rule(std::vector<double> theta, std::size_t p, F&& f) {
  const double base = theta[p];
  theta[p] = base + kHalfPi;
  auto plus = f(theta);
  theta[p] = base - kHalfPi;
  auto minus = f(theta);
  if constexpr (std::is_same_v<decltype(plus), double>) {
    return 0.5 * (plus - minus);
  } else {
    for (std::size_t i = 0; i < plus.size(); ++i)
      plus[i] = 0.5 * (plus[i] - minus[i]);
    return plus;
  }
}

}  // namespace

int param_count(const ModelConfig& cfg) {
  check_config(cfg);
  return 2 * cfg.n_qubits * cfg.layers;
}

qsim::Circuit build_circuit(const ModelConfig& cfg,
                            const std::vector<double>& x,
                            const std::vector<double>& theta) {
  check_shapes(cfg, x, theta);
  const int n = cfg.n_qubits;
  qsim::Circuit c(n);
  for (int q = 0; q < n; ++q) c.append(qsim::Gate::ry(q, x[q]));
  std::size_t p = 0;
  for (int l = 0; l < cfg.layers; ++l) {
    for (int q = 0; q < n; ++q) c.append(qsim::Gate::ry(q, theta[p++]));
    for (int q = 0; q < n; ++q) c.append(qsim::Gate::rz(q, theta[p++]));
    if (n > 1)
      for (int q = 0; q < n; ++q) c.append(qsim::Gate::cx(q, (q + 1) % n));
  }
  return c;
}

qsim::StateVector run_model(const ModelConfig& cfg,
                            const std::vector<double>& x,
                            const std::vector<double>& theta) {
  qsim::StateVector s(cfg.n_qubits);
  qsim::run_circuit(s, build_circuit(cfg, x, theta));
  return s;
}

std::vector<double> logits(const ModelConfig& cfg,
                           const std::vector<double>& x,
                           const std::vector<double>& theta) {
  const qsim::StateVector s = run_model(cfg, x, theta);
  std::vector<double> out(cfg.n_classes);
  for (int c = 0; c < cfg.n_classes; ++c) out[c] = qsim::expectation_z(s, c);
  return out;
}

std::vector<double> softmax(const std::vector<double>& v) {
  if (v.empty()) throw Error("softmax of empty vector");
  const double m = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double cross_entropy(const std::vector<double>& logit_values, int label) {
  if (label < 0 || std::size_t(label) >= logit_values.size())
    throw Error("label out of range");
  const std::vector<double> p = softmax(logit_values);
  return -std::log(std::max(p[label], 1e-300));
}

double sample_loss(const ModelConfig& cfg, const std::vector<double>& x,
                   int label, const std::vector<double>& theta) {
  return cross_entropy(logits(cfg, x, theta), label);
}

int predict(const ModelConfig& cfg, const std::vector<double>& x,
            const std::vector<double>& theta) {
  const std::vector<double> l = logits(cfg, x, theta);
  return int(std::max_element(l.begin(), l.end()) - l.begin());
}

std::vector<std::vector<double>> logits_jacobian(
    const ModelConfig& cfg, const std::vector<double>& x,
    const std::vector<double>& theta) {
  check_shapes(cfg, x, theta);
  const std::size_t n_params = theta.size();
  std::vector<std::vector<double>> jac(n_params);
  for (std::size_t p = 0; p < n_params; ++p) {
    jac[p] = shift_rule(theta, p, [&](const std::vector<double>& t) {
      return logits(cfg, x, t);
    });
  }
  return jac;
}

std::vector<double> parameter_shift_grad(const ModelConfig& cfg,
                                         const std::vector<double>& x,
                                         int label,
                                         const std::vector<double>& theta) {
  const std::vector<std::vector<double>> jac = logits_jacobian(cfg, x, theta);
  std::vector<double> dlogit = softmax(logits(cfg, x, theta));
  if (label < 0 || std::size_t(label) >= dlogit.size())
    throw Error("label out of range");
  dlogit[label] -= 1.0;
  std::vector<double> grad(theta.size(), 0.0);
  for (std::size_t p = 0; p < theta.size(); ++p)
    grad[p] = std::inner_product(jac[p].begin(), jac[p].end(), dlogit.begin(),
                                 0.0);
  return grad;
}

void sgd_step(std::vector<double>& theta, const std::vector<double>& grad,
              double lr) {
  if (theta.size() != grad.size())
    throw Error("gradient length does not match parameters");
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = terngrad::cyclic_wrap(theta[i] - lr * grad[i], kParamPeriod);
}

namespace {

void check_idx(const std::vector<std::size_t>& idx, std::size_t limit) {
  if (idx.empty()) throw Error("empty sample index set");
  for (std::size_t i : idx)
    if (i >= limit) throw Error("sample index out of range");
}

class BlobTask final : public Task {
 public:
  explicit BlobTask(std::uint64_t seed) {
    cfg_ = ModelConfig{4, 2, 2};
    constexpr int kTotal = 200, kTrain = 160;
    constexpr double kPi = 3.1415926535897932384626433832795;
    Rng rng(Rng::derive(seed, 0x626c6f62));  // "blob"
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < kTotal; ++i) {
      const int label = i % 2;
      const double center = (label == 0 ? 0.25 : 0.75) * kPi;
      std::vector<double> x(cfg_.n_qubits);
      for (double& v : x) v = center + 0.08 * kPi * rng.gaussian();
      xs.push_back(std::move(x));
      ys.push_back(label);
    }
    std::vector<std::size_t> order(kTotal);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = kTotal; i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    for (int i = 0; i < kTotal; ++i) {
      auto& x_dst = i < kTrain ? train_x_ : test_x_;
      auto& y_dst = i < kTrain ? train_y_ : test_y_;
      x_dst.push_back(std::move(xs[order[i]]));
      y_dst.push_back(ys[order[i]]);
    }
  }

  const ModelConfig& config() const override { return cfg_; }
  int param_count() const override { return qnn::param_count(cfg_); }
  std::size_t train_count() const override { return train_x_.size(); }

  double loss(const std::vector<double>& theta,
              const std::vector<std::size_t>& idx) const override {
    check_idx(idx, train_x_.size());
    double sum = 0.0;
    for (std::size_t i : idx)
      sum += sample_loss(cfg_, train_x_[i], train_y_[i], theta);
    return sum / double(idx.size());
  }

  std::vector<double> gradient(
      const std::vector<double>& theta,
      const std::vector<std::size_t>& idx) const override {
    check_idx(idx, train_x_.size());
    std::vector<double> acc(theta.size(), 0.0);
    for (std::size_t i : idx) {
      const std::vector<double> g =
          parameter_shift_grad(cfg_, train_x_[i], train_y_[i], theta);
      for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += g[p];
    }
    for (double& v : acc) v /= double(idx.size());
    return acc;
  }

  double eval_loss(const std::vector<double>& theta) const override {
    std::vector<std::size_t> all(train_x_.size());
    std::iota(all.begin(), all.end(), 0);
    return loss(theta, all);
  }

  double accuracy(const std::vector<double>& theta) const override {
    int hits = 0;
    for (std::size_t i = 0; i < test_x_.size(); ++i)
      hits += predict(cfg_, test_x_[i], theta) == test_y_[i];
    return double(hits) / double(test_x_.size());
  }

 private:
  ModelConfig cfg_;
  std::vector<std::vector<double>> train_x_, test_x_;
  std::vector<int> train_y_, test_y_;
};

// Common base for the data-free tasks: the objective is a single scalar
// expectation of the ansatz state at x = 0.
class ScalarTask : public Task {
 public:
  const ModelConfig& config() const override { return cfg_; }
  int param_count() const override { return qnn::param_count(cfg_); }
  std::size_t train_count() const override { return 0; }

  double loss(const std::vector<double>& theta,
              const std::vector<std::size_t>&) const override {
    return eval_loss(theta);
  }

  std::vector<double> gradient(
      const std::vector<double>& theta,
      const std::vector<std::size_t>&) const override {
    check_shapes(cfg_, zeros_, theta);
    std::vector<double> grad(theta.size());
    for (std::size_t p = 0; p < theta.size(); ++p)
      grad[p] = shift_rule(theta, p, [&](const std::vector<double>& t) {
        return loss_value(t);
      });
    return grad;
  }

  double eval_loss(const std::vector<double>& theta) const override {
    check_shapes(cfg_, zeros_, theta);
    return loss_value(theta);
  }

 protected:
  ScalarTask(const ModelConfig& cfg)
      : cfg_(cfg), zeros_(std::size_t(cfg.n_qubits), 0.0) {}

  qsim::StateVector state_at(const std::vector<double>& theta) const {
    return run_model(cfg_, zeros_, theta);
  }

  virtual double loss_value(const std::vector<double>& theta) const = 0;

  ModelConfig cfg_;
  std::vector<double> zeros_;
};

class StateprepTask final : public ScalarTask {
 public:
  explicit StateprepTask(std::uint64_t seed)
      : ScalarTask(ModelConfig{2, 2, 1}),
        target_(qsim::StateVector::basis(2, 0)) {
    Rng rng(Rng::derive(seed, 0x70726570));  // "prep"
    std::vector<qsim::complex> amps(4);
    double norm2 = 0.0;
    for (auto& a : amps) {
      a = {rng.gaussian(), rng.gaussian()};
      norm2 += std::norm(a);
    }
    for (auto& a : amps) a /= std::sqrt(norm2);
    target_ = qsim::StateVector::from_amplitudes(2, std::move(amps));
  }

  double accuracy(const std::vector<double>& theta) const override {
    return overlap2(theta);
  }

 private:
  double overlap2(const std::vector<double>& theta) const {
    const double f = qsim::fidelity(state_at(theta), target_);
    return f * f;
  }

  double loss_value(const std::vector<double>& theta) const override {
    return 1.0 - overlap2(theta);
  }

  qsim::StateVector target_;
};

class QuboTask final : public ScalarTask {
 public:
  explicit QuboTask(std::uint64_t seed) : ScalarTask(ModelConfig{4, 2, 1}) {
    constexpr int kVars = 4;
    Rng rng(Rng::derive(seed, 0x7175626f));  // "qubo"
    double coeff[kVars][kVars] = {};
    for (int i = 0; i < kVars; ++i)
      for (int j = i; j < kVars; ++j) coeff[i][j] = 2.0 * rng.uniform() - 1.0;
    energies_.resize(std::size_t(1) << kVars);
    for (std::size_t b = 0; b < energies_.size(); ++b) {
      double e = 0.0;
      for (int i = 0; i < kVars; ++i)
        for (int j = i; j < kVars; ++j)
          if (((b >> i) & 1) && ((b >> j) & 1)) e += coeff[i][j];
      energies_[b] = e;
    }
    e_min_ = *std::min_element(energies_.begin(), energies_.end());
    e_max_ = *std::max_element(energies_.begin(), energies_.end());
    if (e_max_ - e_min_ < 1e-9)
      throw Error("degenerate objective; pick another seed");
  }

  double accuracy(const std::vector<double>& theta) const override {
    return (e_max_ - mean_energy(theta)) / (e_max_ - e_min_);
  }

 private:
  double mean_energy(const std::vector<double>& theta) const {
    const qsim::StateVector s = state_at(theta);
    double e = 0.0;
    for (std::size_t b = 0; b < energies_.size(); ++b)
      e += std::norm(s.amplitude(b)) * energies_[b];
    return e;
  }

  // Nonnegative gap to the exact optimum, zero iff the state sits on it.
  double loss_value(const std::vector<double>& theta) const override {
    return mean_energy(theta) - e_min_;
  }

  std::vector<double> energies_;
  double e_min_ = 0.0, e_max_ = 0.0;
};

}  // namespace

std::unique_ptr<Task> make_blob_task(std::uint64_t seed) {
  return std::make_unique<BlobTask>(seed);
}

std::unique_ptr<Task> make_stateprep_task(std::uint64_t seed) {
  return std::make_unique<StateprepTask>(seed);
}

std::unique_ptr<Task> make_qubo_task(std::uint64_t seed) {
  return std::make_unique<QuboTask>(seed);
}

std::unique_ptr<Task> make_task(const std::string& name, std::uint64_t seed) {
  if (name == "blobs") return make_blob_task(seed);
  if (name == "stateprep") return make_stateprep_task(seed);
  if (name == "qubo") return make_qubo_task(seed);
  throw Error("unknown task: " + name);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= std::uint32_t(std::uint8_t(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

void save_params(const std::string& path, const std::vector<double>& theta) {
  std::string blob;
  put_u32(blob, kCheckpointMagic);
  put_u32(blob, kCheckpointVersion);
  put_u32(blob, std::uint32_t(theta.size()));
  put_u32(blob, 0);
  for (double v : theta) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i)
      blob.push_back(char((bits >> (8 * i)) & 0xff));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out.write(blob.data(), std::streamsize(blob.size()));
  if (!out) throw Error("checkpoint write failed: " + path);
}

std::vector<double> load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 16) throw Error("checkpoint truncated");
  if (get_u32(blob, 0) != kCheckpointMagic)
    throw Error("not a parameter checkpoint");
  if (get_u32(blob, 4) != kCheckpointVersion)
    throw Error("unsupported checkpoint version");
  const std::uint32_t count = get_u32(blob, 8);
  if (get_u32(blob, 12) != 0) throw Error("nonzero reserved field");
  if (blob.size() != 16 + std::size_t(count) * 8)
    throw Error("checkpoint length does not match parameter count");
  std::vector<double> theta(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= std::uint64_t(std::uint8_t(blob[16 + 8 * i + b])) << (8 * b);
    std::memcpy(&theta[i], &bits, 8);
  }
  return theta;
}

}  // namespace qfed::qnn

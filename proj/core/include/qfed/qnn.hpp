// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qfed/qsim.hpp"
#include "qfed/rng.hpp"

// Variational circuit model and the small training tasks used to exercise
// federated runs.
//
// Ansatz: RY(x_j) feature embedding on each qubit, then per layer one RY
// row, one RZ row and a CX ring 0->1->...->n-1->0. Parameters are read
// row-major (layer, row, qubit) and live on a 2*pi circle. Class c's
// logit is the exact <Z> on qubit c.
namespace qfed::qnn {

inline constexpr double kParamPeriod = 6.283185307179586476925286766559;

struct ModelConfig {
  int n_qubits = 4;
  int layers = 2;
  int n_classes = 2;
};

int param_count(const ModelConfig& cfg);  // 2 * n_qubits * layers

qsim::Circuit build_circuit(const ModelConfig& cfg,
                            const std::vector<double>& x,
                            const std::vector<double>& theta);

qsim::StateVector run_model(const ModelConfig& cfg,
                            const std::vector<double>& x,
                            const std::vector<double>& theta);

// <Z> on qubits 0..n_classes-1.
std::vector<double> logits(const ModelConfig& cfg,
                           const std::vector<double>& x,
                           const std::vector<double>& theta);

std::vector<double> softmax(const std::vector<double>& v);
double cross_entropy(const std::vector<double>& logit_values, int label);

double sample_loss(const ModelConfig& cfg, const std::vector<double>& x,
                   int label, const std::vector<double>& theta);

int predict(const ModelConfig& cfg, const std::vector<double>& x,
            const std::vector<double>& theta);

// d logit_c / d theta_p as a param_count x n_classes matrix, via the
// two-point shift rule (f(p + pi/2) - f(p - pi/2)) / 2, which is exact
// for rotation gates.
std::vector<std::vector<double>> logits_jacobian(
    const ModelConfig& cfg, const std::vector<double>& x,
    const std::vector<double>& theta);

// d cross_entropy / d theta via the jacobian and the softmax chain rule.
std::vector<double> parameter_shift_grad(const ModelConfig& cfg,
                                         const std::vector<double>& x,
                                         int label,
                                         const std::vector<double>& theta);

// theta <- wrap(theta - lr * grad) onto the parameter circle.
void sgd_step(std::vector<double>& theta, const std::vector<double>& grad,
              double lr);

// One training objective: mean loss and gradient over sample indices for
// data-backed tasks; data-free tasks ignore the index set. accuracy() is
// the task's own quality score in [0, 1] (held-out accuracy, fidelity, or
// approximation ratio).
class Task {
 public:
  virtual ~Task() = default;
  virtual const ModelConfig& config() const = 0;
  virtual int param_count() const = 0;
  virtual std::size_t train_count() const = 0;  // 0 when data-free
  virtual double loss(const std::vector<double>& theta,
                      const std::vector<std::size_t>& idx) const = 0;
  virtual std::vector<double> gradient(
      const std::vector<double>& theta,
      const std::vector<std::size_t>& idx) const = 0;
  virtual double eval_loss(const std::vector<double>& theta) const = 0;
  virtual double accuracy(const std::vector<double>& theta) const = 0;
};

// Two well-separated Gaussian blobs in angle space, 4 features, 200
// samples split 160 train / 40 test. Deterministic in the seed.
std::unique_ptr<Task> make_blob_task(std::uint64_t seed);

// Drive a 2-qubit ansatz toward a fixed random target state; loss is
// 1 - fidelity^2, accuracy is fidelity^2. Data-free.
std::unique_ptr<Task> make_stateprep_task(std::uint64_t seed);

// Minimize a random 4-variable quadratic binary objective through the
// diagonal observable it induces; loss is the gap to the optimum,
// accuracy the approximation ratio. Data-free.
std::unique_ptr<Task> make_qubo_task(std::uint64_t seed);

std::unique_ptr<Task> make_task(const std::string& name, std::uint64_t seed);

// Parameter checkpoint: 16-byte header (u32 magic, u32 version, u32
// param_count, u32 zero) then little-endian f64 values.
inline constexpr std::uint32_t kCheckpointMagic = 0x4d525051u;  // "QPRM"
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_params(const std::string& path, const std::vector<double>& theta);
std::vector<double> load_params(const std::string& path);

}  // namespace qfed::qnn

// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths: dense simulation, tracked basis
// states, the aggregation adder, and quantization.
#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "qfed/aggadder.hpp"
#include "qfed/fedsim.hpp"
#include "qfed/qhe.hpp"
#include "qfed/qnn.hpp"
#include "qfed/qotp.hpp"
#include "qfed/qsim.hpp"
#include "qfed/rng.hpp"
#include "qfed/terngrad.hpp"

using namespace qfed;

namespace {

// Dense state vector cost doubles per qubit; this is the wall every
// qubit-count decision runs into.
void BM_DenseLayer(benchmark::State& state) {
  const int n = int(state.range(0));
  qsim::Circuit c(n);
  for (int q = 0; q < n; ++q) c.append(qsim::Gate::h(q));
  for (int q = 0; q < n; ++q) c.append(qsim::Gate::cx(q, (q + 1) % n));
  qsim::StateVector psi(n);
  for (auto _ : state) {
    qsim::run_circuit(psi, c);
    benchmark::DoNotOptimize(psi.amplitude(0));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DenseLayer)->DenseRange(8, 18, 2);

// The tracked basis-state path the aggregation server runs on: constant
// work per gate regardless of register width.
void BM_TrackedAdder(benchmark::State& state) {
  const int w = int(state.range(0));
  const qsim::Circuit adder = aggadder::build_adder(w);
  for (auto _ : state) {
    qsim::BasisState s(2 * w + 1, 1 | (std::uint64_t(2) << w), 1.0);
    for (const auto& g : adder.gates) s.apply(g);
    benchmark::DoNotOptimize(s.index());
  }
}
BENCHMARK(BM_TrackedAdder)->DenseRange(3, 9, 3);

// Same adder through the dense simulator, for the crossover picture.
void BM_DenseAdder(benchmark::State& state) {
  const int w = int(state.range(0));
  const qsim::Circuit adder = aggadder::build_adder(w);
  for (auto _ : state) {
    qsim::StateVector psi(2 * w + 1);
    qsim::run_circuit(psi, adder);
    benchmark::DoNotOptimize(psi.amplitude(0));
  }
}
BENCHMARK(BM_DenseAdder)->DenseRange(3, 9, 3);

// One fully masked operand fold: compose, run the adder homomorphically,
// tear down. This is the per-client server cost of a round.
void BM_MaskedFold(benchmark::State& state) {
  const int w = int(state.range(0));
  Rng rng(1);
  for (auto _ : state) {
    auto meter = std::make_shared<qhe::GadgetMeter>();
    auto acc = aggadder::EncryptedAccumulator::with_frame(w, meter);
    const auto mv = aggadder::mask_value_random(w, 1, rng);
    acc.add_operand(mv.state, mv.key, rng);
    benchmark::DoNotOptimize(acc.acc_cipher().index());
  }
}
BENCHMARK(BM_MaskedFold)->DenseRange(3, 9, 3);

void BM_Ternarize(benchmark::State& state) {
  const int n = int(state.range(0));
  Rng rng(7);
  std::vector<double> g(n);
  for (double& v : g) v = rng.gaussian();
  for (auto _ : state) {
    auto t = terngrad::ternarize(g, rng);
    benchmark::DoNotOptimize(t.nnz());
  }
}
BENCHMARK(BM_Ternarize)->Range(64, 4096);

// Parameter-shift gradient of the 4-qubit classifier circuit, the inner
// loop of every training round.
void BM_ShiftGradient(benchmark::State& state) {
  auto task = qnn::make_task("blobs", 3);
  std::vector<double> theta(task->param_count(), 0.1);
  for (auto _ : state) {
    auto g = task->gradient(theta, {0, 1, 2, 3});
    benchmark::DoNotOptimize(g[0]);
  }
}
BENCHMARK(BM_ShiftGradient);

// One whole federated round, both workflows, small task.
void BM_FederatedRound(benchmark::State& state) {
  fedsim::FedConfig cfg;
  cfg.task = "stateprep";
  cfg.workflow = state.range(0) == 0 ? "baseline" : "cryptoqfl";
  cfg.clients = 4;
  cfg.rounds = 1;
  cfg.lr = 0.2;
  cfg.seed = 5;
  for (auto _ : state) {
    auto r = fedsim::run(cfg);
    benchmark::DoNotOptimize(r.final_loss);
  }
}
BENCHMARK(BM_FederatedRound)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();

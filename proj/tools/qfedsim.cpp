// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: federated training runs, adder benchmarking and
// a quick self check of the cryptographic invariants.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qfed/aggadder.hpp"
#include "qfed/config.hpp"
#include "qfed/error.hpp"
#include "qfed/fedsim.hpp"
#include "qfed/qhe.hpp"
#include "qfed/qnn.hpp"
#include "qfed/qotp.hpp"
#include "qfed/qsim.hpp"
#include "qfed/rng.hpp"
#include "qfed/terngrad.hpp"

namespace {

using json = nlohmann::json;
using namespace qfed;

struct TrainArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string workflow, task, quant;
  std::uint64_t seed = 0;
  int clients = 0;
  int rounds = 0;
  bool trace = false;
};

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

int run_train(const TrainArgs& args, const CLI::App& sub) {
  config::KvMap kv;
  if (!args.config_path.empty()) kv = config::load_kv_file(args.config_path);
  if (sub.count("--workflow")) kv["workflow"] = args.workflow;
  if (sub.count("--task")) kv["task"] = args.task;
  if (sub.count("--quant")) kv["quant"] = args.quant;
  if (sub.count("--seed")) kv["seed"] = std::to_string(args.seed);
  if (sub.count("--clients")) kv["clients"] = std::to_string(args.clients);
  if (sub.count("--rounds")) kv["rounds"] = std::to_string(args.rounds);
  const fedsim::FedConfig cfg = fedsim::FedConfig::from_kv(kv);

  const fedsim::RunResult rr = fedsim::run(cfg);

  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out(args.out_dir);
  write_file(out / "metrics.csv", fedsim::metrics_csv(rr));
  qnn::save_params((out / "params.bin").string(), rr.final_theta);

  json summary;
  summary["config_hash"] = hex64(cfg.hash());
  summary["task"] = cfg.task;
  summary["workflow"] = cfg.workflow;
  summary["quant"] = cfg.quant;
  summary["clients"] = cfg.clients;
  summary["rounds"] = cfg.rounds;
  summary["final_loss"] = rr.final_loss;
  summary["final_accuracy"] = rr.final_accuracy;
  summary["total_latency"] = rr.total_latency;
  summary["bytes_total"] = rr.bytes_total;
  summary["server_che_latency"] = rr.server_che_latency;
  summary["quantum_payload_ratio"] = rr.quantum_payload_ratio;
  json breakdown;
  for (const auto& [step, units] : rr.latency_by_step) breakdown[step] = units;
  summary["latency_breakdown"] = breakdown;
  write_file(out / "summary.json", summary.dump(2) + "\n");

  if (args.trace) {
    // Key evolution of one masked operand through the round's adder, at
    // the width this run used. The pad key comes off the master seed so
    // the dump is reproducible.
    const int w = cfg.effective_width();
    Rng pad(Rng::derive(cfg.seed, fedsim::stream::kRoundSeed, 0));
    auto meter = std::make_shared<qhe::GadgetMeter>();
    auto acc = aggadder::EncryptedAccumulator::with_frame(w, meter);
    const qotp::PauliKey key = qotp::random_key(w, pad);
    Rng server(Rng::derive(cfg.seed, fedsim::stream::kServer, 0));
    acc.add_operand(aggadder::mask_value(w, 1, key).state, key, server);
    // Initial register key: unmasked accumulator with the operand's pad
    // bits loaded on wires [0, w).
    qotp::PauliKey initial = qotp::PauliKey::zero(2 * w + 1);
    for (int b = 0; b < w; ++b) {
      initial.z[b] = key.z[b];
      initial.x[b] = key.x[b];
    }
    const qhe::KeyTrace trace = qhe::assemble_trace(initial, acc.log());
    write_file(out / "adder_key_trace.txt", qhe::format_trace(trace));
  }

  std::printf("workflow=%s task=%s clients=%d rounds=%d\n",
              cfg.workflow.c_str(), cfg.task.c_str(), cfg.clients,
              cfg.rounds);
  std::printf("final_loss=%.6f final_accuracy=%.4f\n", rr.final_loss,
              rr.final_accuracy);
  std::printf("total_latency=%.1f bytes_total=%.0f payload_ratio=%.2f\n",
              rr.total_latency, rr.bytes_total, rr.quantum_payload_ratio);
  std::printf("wrote %s\n", (out / "summary.json").string().c_str());
  return 0;
}

int run_bench_adder(int width, bool dump_circuit) {
  const auto t0 = std::chrono::steady_clock::now();
  const aggadder::GateCostModel costs;
  const auto rows = aggadder::comparison_rows(width, costs);
  const auto t1 = std::chrono::steady_clock::now();

  std::cout << aggadder::format_comparison_csv(rows);
  for (const auto& row : rows)
    if (!row.note.empty())
      std::cout << "note(" << row.scheme << "): " << row.note << "\n";

  const double ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  std::printf("measured in %.2f ms at width %d\n", ms, width);

  if (dump_circuit) std::cout << qsim::format_circuit(aggadder::build_adder(width));
  return 0;
}

// Fast self check of the load-bearing invariants; one line each. suite
// narrows to one area ("all" runs everything).
int run_verify(const std::string& suite) {
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& why = "") {
    std::printf("%s %s%s%s\n", ok ? "PASS" : "FAIL", name,
                why.empty() ? "" : ": ", why.c_str());
    failures += !ok;
  };
  auto wants = [&](const char* area) {
    return suite == "all" || suite == area;
  };

  if (wants("pad")) {
    // Averaging a masked state over every pad key leaves no trace of it.
    bool ok = true;
    for (int n = 1; n <= 2 && ok; ++n) {
      const std::size_t dim = std::size_t(1) << n;
      Rng rng(9);
      std::vector<qsim::complex> amps(dim);
      double norm2 = 0.0;
      for (auto& a : amps) {
        a = {rng.gaussian(), rng.gaussian()};
        norm2 += std::norm(a);
      }
      for (auto& a : amps) a /= std::sqrt(norm2);
      const auto base = qsim::StateVector::from_amplitudes(n, amps);
      std::vector<std::vector<qsim::complex>> rho(
          dim, std::vector<qsim::complex>(dim, 0.0));
      const int n_keys = 1 << (2 * n);
      for (int k = 0; k < n_keys; ++k) {
        qotp::PauliKey key;
        for (int q = 0; q < n; ++q) {
          key.z.push_back((k >> (2 * q)) & 1);
          key.x.push_back((k >> (2 * q + 1)) & 1);
        }
        qsim::StateVector s = base;
        qotp::encrypt(s, key);
        for (std::size_t i = 0; i < dim; ++i)
          for (std::size_t j = 0; j < dim; ++j)
            rho[i][j] += s.amplitude(i) * std::conj(s.amplitude(j)) /
                         double(n_keys);
      }
      for (std::size_t i = 0; i < dim && ok; ++i)
        for (std::size_t j = 0; j < dim && ok; ++j) {
          const qsim::complex want = i == j ? 1.0 / double(dim) : 0.0;
          ok = std::abs(rho[i][j] - want) < 1e-12;
        }
    }
    report("pad hiding (all keys average to the fully mixed state)", ok);
  }

  if (wants("qhe")) {
    // Masked execution agrees with plaintext execution.
    int passed = 0;
    const int trials = 1000;
    bool ok = true;
    Rng rng(10);
    for (int trial = 0; trial < trials && ok; ++trial) {
      const int n = 2 + int(rng.below(2));
      qsim::Circuit c(n);
      const int depth = 1 + int(rng.below(10));
      for (int g = 0; g < depth; ++g) {
        switch (rng.below(7)) {
          case 0: c.append(qsim::Gate::x(int(rng.below(n)))); break;
          case 1: c.append(qsim::Gate::z(int(rng.below(n)))); break;
          case 2: c.append(qsim::Gate::h(int(rng.below(n)))); break;
          case 3: c.append(qsim::Gate::p(int(rng.below(n)))); break;
          case 4: {
            const int a = int(rng.below(n));
            c.append(qsim::Gate::cx(a, int((a + 1 + rng.below(n - 1)) % n)));
            break;
          }
          case 5: {
            const int a = int(rng.below(n));
            c.append(qsim::Gate::cz(a, int((a + 1 + rng.below(n - 1)) % n)));
            break;
          }
          default: {
            if (n < 3) break;
            c.append(qsim::Gate::ccx(0, 1, 2));
            break;
          }
        }
      }
      std::vector<qsim::complex> amps(std::size_t(1) << n);
      double norm2 = 0.0;
      for (auto& a : amps) {
        a = {rng.gaussian(), rng.gaussian()};
        norm2 += std::norm(a);
      }
      for (auto& a : amps) a /= std::sqrt(norm2);
      qsim::StateVector plain = qsim::StateVector::from_amplitudes(n, amps);
      qsim::StateVector cipher = plain;
      qsim::run_circuit(plain, c);

      const qotp::PauliKey key = qotp::random_key(n, rng);
      qotp::encrypt(cipher, key);
      auto meter = std::make_shared<qhe::GadgetMeter>();
      auto gadget = qhe::GadgetOracle::with_frame(key, meter);
      qhe::KeyUpdateLog log;
      log.n_qubits = n;
      qhe::homomorphic_run_frame(cipher, c, gadget, log);
      qotp::decrypt(cipher, qhe::replay_key_updates(key, log));
      ok = qsim::fidelity(plain, cipher) >= 1.0 - 1e-9;
      passed += ok;
    }
    char line[64];
    std::snprintf(line, sizeof line, "%d/%d round trips", passed, trials);
    report("masked execution matches plaintext execution", ok, line);
  }

  if (wants("adder")) {
    // The adder adds, plainly and under masks.
    bool ok = true;
    for (int w = 2; w <= 3 && ok; ++w) {
      const qsim::Circuit adder = aggadder::build_adder(w);
      const std::uint64_t m = (1u << w) - 1;
      for (std::uint32_t a = 0; a <= m && ok; ++a)
        for (std::uint32_t b = 0; b <= m && ok; ++b) {
          qsim::BasisState s(2 * w + 1,
                             std::uint64_t(a) | (std::uint64_t(b) << w),
                             1.0);
          for (const auto& g : adder.gates) s.apply(g);
          const auto acc = (s.index() >> w) & m;
          ok = acc == ((a + b) & m) && (s.index() & m) == a &&
               (s.index() >> (2 * w)) == 0;
        }
    }
    Rng rng(11);
    for (int trial = 0; trial < 20 && ok; ++trial) {
      const int w = 3;
      auto meter = std::make_shared<qhe::GadgetMeter>();
      auto acc = aggadder::EncryptedAccumulator::with_frame(w, meter);
      std::vector<qotp::PauliKey> keys;
      std::uint32_t want = 0;
      for (int op = 0; op < 3; ++op) {
        const std::uint32_t v = std::uint32_t(rng.below(8));
        const qotp::PauliKey key = qotp::random_key(w, rng);
        acc.add_operand(aggadder::mask_value(w, v, key).state, key, rng);
        keys.push_back(key);
        want = (want + v) & 7;
      }
      const auto final_key =
          aggadder::EncryptedAccumulator::replay_aggregation_key(w, keys);
      const auto got = aggadder::unmask_value(
          acc.acc_cipher(),
          aggadder::EncryptedAccumulator::slice_acc_key(final_key, w));
      ok = got == want;
    }
    report("adder exhaustive and masked spot checks", ok);
  }

  if (wants("ternary")) {
    // Ternarization is an unbiased estimator.
    Rng rng(12);
    std::vector<double> g(8);
    for (double& v : g) v = 2.0 * rng.uniform() - 1.0;
    const float scale = 1.25f;
    const int m = 20000;
    std::vector<double> sum(g.size(), 0.0);
    for (int i = 0; i < m; ++i) {
      const auto t = terngrad::ternarize_with_scale(g, scale, rng);
      for (std::size_t j = 0; j < g.size(); ++j)
        sum[j] += double(scale) * t.t[j];
    }
    bool ok = true;
    for (std::size_t j = 0; j < g.size() && ok; ++j) {
      const double var = double(scale) * std::abs(g[j]) - g[j] * g[j];
      const double tol = 5.0 * std::sqrt(std::max(var, 1e-12) / m);
      ok = std::abs(sum[j] / m - g[j]) < tol + 1e-9;
    }
    report("ternary quantization unbiased within 5 sigma", ok);
  }

  if (wants("formats")) {
    // Round trips of both serialized formats.
    bool ok = true;
    Rng rng(13);
    std::vector<double> g(50);
    for (double& v : g) v = rng.gaussian();
    const auto t = terngrad::ternarize(g, rng);
    const auto bytes = terngrad::serialize_update(t);
    const auto back = terngrad::parse_update(bytes);
    ok = back.scale == t.scale && back.t == t.t &&
         bytes.size() == 17 + 4 * t.nnz();

    const auto ckpt = std::filesystem::temp_directory_path() /
                      "qfedsim_verify_ckpt.bin";
    qnn::save_params(ckpt.string(), g);
    ok = ok && qnn::load_params(ckpt.string()) == g;
    std::filesystem::remove(ckpt);
    report("wire and checkpoint formats round trip", ok);
  }

  std::printf("%s\n", failures == 0 ? "verify: all checks passed"
                                    : "verify: FAILURES present");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulator of federated variational-circuit training over "
      "one-time-pad encrypted updates"};
  app.require_subcommand(1);

  TrainArgs targs;
  CLI::App* train = app.add_subcommand(
      "train", "Run a federated (or centralized) training simulation");
  train->add_option("--config", targs.config_path,
                    "key=value config file (CLI flags override it)");
  train->add_option("--out", targs.out_dir,
                    "output directory for metrics.csv, summary.json, "
                    "params.bin");
  train->add_option("--workflow", targs.workflow,
                    "baseline | cryptoqfl | centralized");
  train->add_option("--task", targs.task, "blobs | stateprep | qubo");
  train->add_option("--quant", targs.quant, "ternary | dense");
  train->add_option("--seed", targs.seed, "master seed");
  train->add_option("--clients", targs.clients, "number of clients");
  train->add_option("--rounds", targs.rounds, "federated rounds");
  train->add_flag("--trace", targs.trace,
                  "also dump a pad-key trace of one adder pass");

  int bench_width = 3;
  bool dump_circuit = false;
  CLI::App* bench = app.add_subcommand(
      "bench-adder", "Measure the aggregation adder and print the "
                     "comparison table");
  bench->add_option("--w", bench_width, "operand width in bits")
      ->check(CLI::Range(1, 9));
  bench->add_flag("--dump-circuit", dump_circuit,
                  "print the adder circuit in text form");

  std::string suite = "all";
  CLI::App* verify = app.add_subcommand(
      "verify", "Self check of masking, homomorphic execution, adder "
                "arithmetic and formats");
  verify->add_option("--suite", suite, "restrict to one check area")
      ->check(CLI::IsMember({"all", "pad", "qhe", "adder", "ternary",
                             "formats"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(targs, *train);
    if (bench->parsed()) return run_bench_adder(bench_width, dump_circuit);
    return run_verify(suite);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

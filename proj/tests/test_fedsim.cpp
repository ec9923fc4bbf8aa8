// SPDX-License-Identifier: Apache-2.0
#include "qfed/fedsim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qfed/error.hpp"
#include "qfed/qnn.hpp"
#include "qfed/rng.hpp"
#include "qfed/terngrad.hpp"

using namespace qfed;
using fedsim::FedConfig;

namespace {

// Unencrypted replica of the training contract documented in the header:
// same stream derivations, same shard rule, same update algebra, but the
// aggregate is a plain integer sum with no masking, no adder circuit and
// no ciphertext anywhere. Whatever the encrypted engine decodes must match
// this bit for bit.
struct PlainReplica {
  FedConfig cfg;
  std::unique_ptr<qnn::Task> task;
  int n_params;
  long long digit_max;
  std::vector<std::vector<std::size_t>> shards;
  std::vector<double> theta;
  std::vector<std::vector<long long>> aggregates;

  explicit PlainReplica(const FedConfig& c) : cfg(c) {
    task = qnn::make_task(cfg.task, cfg.seed);
    n_params = task->param_count();
    digit_max =
        cfg.quant == "dense" ? (1ll << (cfg.digit_width - 1)) - 1 : 1ll;
    shards.resize(cfg.clients);
    for (std::size_t i = 0; i < task->train_count(); ++i)
      shards[i % cfg.clients].push_back(i);
    Rng init(Rng::derive(cfg.seed, fedsim::stream::kInit));
    theta.resize(n_params);
    for (double& v : theta)
      v = (2.0 * init.uniform() - 1.0) * 0.1 * 3.14159265358979323846;
  }

  std::vector<double> client_update(int c, int round) {
    Rng rng(Rng::derive(cfg.seed, fedsim::stream::kBatch, c, round));
    std::vector<double> local = theta;
    for (int s = 0; s < cfg.local_steps; ++s) {
      std::vector<std::size_t> idx = shards[c];
      if (cfg.batch > 0 && std::size_t(cfg.batch) < shards[c].size()) {
        idx.resize(cfg.batch);
        for (auto& i : idx) i = shards[c][rng.below(shards[c].size())];
      }
      qnn::sgd_step(local, task->gradient(local, idx), cfg.lr);
    }
    std::vector<double> u(n_params);
    for (int i = 0; i < n_params; ++i)
      u[i] = terngrad::cyclic_wrap(theta[i] - local[i], qnn::kParamPeriod) /
             cfg.lr;
    return u;
  }

  void run() {
    for (int r = 0; r < cfg.rounds; ++r) {
      std::vector<std::vector<double>> updates;
      double raw_scale = 0.0;
      for (int c = 0; c < cfg.clients; ++c) {
        updates.push_back(client_update(c, r));
        for (double v : updates.back())
          raw_scale = std::max(raw_scale, std::abs(v));
      }
      const float scale = static_cast<float>(raw_scale);

      std::vector<long long> sums(n_params, 0);
      for (int c = 0; c < cfg.clients; ++c) {
        if (scale == 0.0f) break;
        if (cfg.quant == "ternary") {
          Rng rng(Rng::derive(cfg.seed, fedsim::stream::kQuant, c, r));
          const auto t =
              terngrad::ternarize_with_scale(updates[c], scale, rng);
          for (int i = 0; i < n_params; ++i) sums[i] += t.t[i];
        } else {
          for (int i = 0; i < n_params; ++i) {
            long long v =
                std::llround(updates[c][i] / scale * double(digit_max));
            sums[i] += std::clamp(v, -digit_max, digit_max);
          }
        }
      }

      std::vector<double> mean(n_params, 0.0);
      if (scale != 0.0f) {
        const double denom = double(cfg.clients) * double(digit_max);
        for (int i = 0; i < n_params; ++i)
          mean[i] = double(scale) * double(sums[i]) / denom;
      }
      qnn::sgd_step(theta, mean, cfg.lr);
      aggregates.push_back(std::move(sums));
    }
  }
};

FedConfig small_cfg(const std::string& workflow, const std::string& quant) {
  FedConfig cfg;
  cfg.task = "stateprep";
  cfg.workflow = workflow;
  cfg.quant = quant;
  cfg.clients = 3;
  cfg.rounds = 3;
  cfg.lr = 0.2;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("config: round trip, strict keys, typed errors") {
  FedConfig cfg;
  cfg.task = "qubo";
  cfg.clients = 5;
  cfg.lr = 0.125;
  cfg.seed = 99;
  const FedConfig back = FedConfig::from_kv(cfg.to_kv());
  CHECK(back.task == "qubo");
  CHECK(back.clients == 5);
  CHECK(back.lr == 0.125);
  CHECK(back.seed == 99);
  CHECK(back.hash() == cfg.hash());

  FedConfig other = cfg;
  other.seed = 100;
  CHECK(other.hash() != cfg.hash());

  CHECK_THROWS_AS(FedConfig::from_kv({{"clinets", "5"}}), Error);
  CHECK_THROWS_AS(FedConfig::from_kv({{"clients", "five"}}), Error);
  CHECK_THROWS_AS(FedConfig::from_kv({{"lr", "0.1x"}}), Error);
  CHECK_THROWS_AS(FedConfig::from_kv({{"task", "mnist"}}), Error);
  CHECK_THROWS_AS(FedConfig::from_kv({{"workflow", "p2p"}}), Error);

  const auto kv = config::parse_kv_text(
      "# comment\n task = blobs \n\nclients=4\nseed=7 # trailing\n");
  CHECK(kv.at("task") == "blobs");
  CHECK(kv.at("clients") == "4");
  CHECK(kv.at("seed") == "7");
  CHECK_THROWS_AS(config::parse_kv_text("a=1\na=2\n"), Error);
  CHECK_THROWS_AS(config::parse_kv_text("just words\n"), Error);
  CHECK_THROWS_AS(config::parse_kv_text("=3\n"), Error);
}

TEST_CASE("config: accumulator width derivation and overflow rejection") {
  FedConfig cfg;
  cfg.quant = "ternary";
  cfg.clients = 1;
  CHECK(cfg.effective_width() == 2);
  cfg.clients = 3;
  CHECK(cfg.effective_width() == 3);
  cfg.clients = 8;
  CHECK(cfg.effective_width() == 5);
  cfg.clients = 20;
  CHECK(cfg.effective_width() == 6);
  cfg.validate();

  cfg.quant = "dense";
  cfg.clients = 8;
  CHECK(cfg.effective_width() == 9);
  cfg.validate();

  // Too many clients for the digit width: the 21-qubit register is over
  // the simulator cap, and the sum bound breaks first anyway.
  cfg.clients = 16;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg.quant = "ternary";
  cfg.clients = 8;
  cfg.width = 3;  // |sum| can reach 8 > 3
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.width = 5;
  cfg.validate();

  FedConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = FedConfig{};
  bad.clients = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = FedConfig{};
  bad.local_steps = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("encrypted aggregation decodes the plain integer sums exactly") {
  for (const char* quant : {"ternary", "dense"}) {
    const FedConfig cfg = small_cfg("cryptoqfl", quant);
    PlainReplica replica(cfg);
    replica.run();
    const fedsim::RunResult rr = fedsim::run(cfg);

    REQUIRE(rr.aggregates.size() == replica.aggregates.size());
    for (std::size_t r = 0; r < rr.aggregates.size(); ++r)
      for (int i = 0; i < replica.n_params; ++i)
        CHECK(rr.aggregates[r][i] == replica.aggregates[r][i]);
    REQUIRE(rr.final_theta.size() == replica.theta.size());
    for (std::size_t i = 0; i < replica.theta.size(); ++i)
      CHECK(rr.final_theta[i] == replica.theta[i]);
  }
}

TEST_CASE("replica oracle also pins the data-backed task") {
  FedConfig cfg;
  cfg.task = "blobs";
  cfg.workflow = "cryptoqfl";
  cfg.clients = 4;
  cfg.rounds = 2;
  cfg.lr = 0.3;
  cfg.seed = 21;
  PlainReplica replica(cfg);
  replica.run();
  const fedsim::RunResult rr = fedsim::run(cfg);
  for (std::size_t r = 0; r < rr.aggregates.size(); ++r)
    for (int i = 0; i < replica.n_params; ++i)
      CHECK(rr.aggregates[r][i] == replica.aggregates[r][i]);
  for (std::size_t i = 0; i < replica.theta.size(); ++i)
    CHECK(rr.final_theta[i] == replica.theta[i]);
}

TEST_CASE("ciphertext-keyed and shared-seed workflows agree bit for bit") {
  const fedsim::RunResult base = fedsim::run(small_cfg("baseline", "ternary"));
  const fedsim::RunResult shared =
      fedsim::run(small_cfg("cryptoqfl", "ternary"));

  REQUIRE(base.aggregates.size() == shared.aggregates.size());
  for (std::size_t r = 0; r < base.aggregates.size(); ++r)
    CHECK(base.aggregates[r] == shared.aggregates[r]);
  CHECK(base.final_theta == shared.final_theta);
  for (std::size_t r = 0; r < base.round_stats.size(); ++r) {
    CHECK(base.round_stats[r].loss == shared.round_stats[r].loss);
    CHECK(base.round_stats[r].accuracy == shared.round_stats[r].accuracy);
  }

  // What the shared seed buys: the server does zero ciphertext algebra
  // and the key blobs drop out of the traffic.
  CHECK(base.server_che_latency > 0.0);
  CHECK(shared.server_che_latency == 0.0);
  CHECK(shared.bytes_total < base.bytes_total);
  CHECK(shared.latency_by_step.at("che_compute") <
        base.latency_by_step.at("che_compute"));
  // The quantum work itself is identical.
  CHECK(base.latency_by_step.at("aggregate") ==
        shared.latency_by_step.at("aggregate"));
}

TEST_CASE("runs are deterministic in the config") {
  const FedConfig cfg = small_cfg("baseline", "ternary");
  const fedsim::RunResult a = fedsim::run(cfg);
  const fedsim::RunResult b = fedsim::run(cfg);
  CHECK(fedsim::metrics_csv(a) == fedsim::metrics_csv(b));
  CHECK(a.final_theta == b.final_theta);
  CHECK(a.bytes_total == b.bytes_total);
  CHECK(a.total_latency == b.total_latency);
}

TEST_CASE("metrics csv: fixed header, eight rows a round, sparse cells") {
  const fedsim::RunResult rr = fedsim::run(small_cfg("cryptoqfl", "ternary"));
  const std::string csv = fedsim::metrics_csv(rr);
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "round,step,latency_units,bytes_up,bytes_down,loss,accuracy");
  int rows = 0;
  int eval_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto last_comma = line.rfind(',');
    const bool has_acc = last_comma + 1 < line.size();
    if (has_acc) ++eval_rows;
    CHECK(has_acc == (line.find("model_update") != std::string::npos));
  }
  CHECK(rows == 8 * rr.config.rounds);
  CHECK(eval_rows == rr.config.rounds);
}

TEST_CASE("centralized workflow: no crypto rows, descent on the task") {
  FedConfig cfg;
  cfg.task = "blobs";
  cfg.workflow = "centralized";
  cfg.rounds = 4;
  cfg.lr = 0.4;
  cfg.seed = 3;
  const fedsim::RunResult rr = fedsim::run(cfg);
  CHECK(rr.aggregates.empty());
  CHECK(rr.server_che_latency == 0.0);
  CHECK(rr.bytes_total == 0.0);
  for (const fedsim::StepRow& row : rr.rows) {
    if (row.step == "local_train" || row.step == "model_update")
      continue;
    CHECK(row.latency == 0.0);
    CHECK(row.bytes_up == 0.0);
    CHECK(row.bytes_down == 0.0);
  }
  CHECK(rr.round_stats.back().loss < rr.round_stats.front().loss);
}

TEST_CASE("quantum payload accounting") {
  // Dense mode ships every parameter at the accumulator width, so the
  // ratio collapses to 32 / width exactly.
  const fedsim::RunResult dense = fedsim::run(small_cfg("cryptoqfl", "dense"));
  const int w = dense.config.effective_width();
  CHECK(dense.quantum_payload_ratio == doctest::Approx(32.0 / w).epsilon(1e-12));

  // Sparse ternary can only do better than shipping every parameter.
  const fedsim::RunResult tern = fedsim::run(small_cfg("cryptoqfl", "ternary"));
  const int wt = tern.config.effective_width();
  CHECK(tern.quantum_payload_ratio >= 32.0 / wt);
}

TEST_CASE("federated descent improves the model") {
  FedConfig cfg;
  cfg.task = "blobs";
  cfg.workflow = "cryptoqfl";
  cfg.clients = 4;
  cfg.rounds = 6;
  cfg.lr = 0.4;
  cfg.seed = 2;
  const fedsim::RunResult rr = fedsim::run(cfg);
  CHECK(rr.round_stats.back().loss < rr.round_stats.front().loss);
  CHECK(rr.final_accuracy >= rr.round_stats.front().accuracy);
}

TEST_CASE("ciphertext key handling dominates baseline round latency") {
  FedConfig cfg;
  cfg.task = "blobs";
  cfg.workflow = "baseline";
  cfg.clients = 8;
  cfg.rounds = 2;
  cfg.seed = 1;
  const fedsim::RunResult rr = fedsim::run(cfg);
  double total = 0.0;
  for (const auto& [step, units] : rr.latency_by_step) total += units;
  const double crypto_share = (rr.latency_by_step.at("che_compute") +
                               rr.latency_by_step.at("upload") +
                               rr.latency_by_step.at("aggregate")) /
                              total;
  CHECK(crypto_share > 0.5);
  CHECK(rr.latency_by_step.at("local_train") / total < 0.05);
}

TEST_CASE("single-node reference run masters the classifier task") {
  FedConfig cfg;
  cfg.task = "blobs";
  cfg.workflow = "centralized";
  cfg.clients = 1;
  cfg.rounds = 25;
  cfg.lr = 0.4;
  cfg.seed = 1;
  const fedsim::RunResult rr = fedsim::run(cfg);
  CHECK(rr.final_accuracy >= 0.9);
}

TEST_CASE("server-side interfaces never mention plaintext key material") {
  // The evaluator header is the server's entire view of the classical
  // ciphertext world: no pad keys, no gradients, no decrypt entry point.
  std::ifstream in(std::string(QFED_SOURCE_DIR) +
                   "/core/include/qfed/che.hpp");
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("PauliKey") == std::string::npos);
  CHECK(text.find("TernaryUpdate") == std::string::npos);
  CHECK(text.find("GradientVector") == std::string::npos);
  CHECK(text.find("qotp") == std::string::npos);

  const auto eval_at = text.find("class CheEvaluator {");
  REQUIRE(eval_at != std::string::npos);
  const std::string eval_block =
      text.substr(eval_at, text.find("};", eval_at) - eval_at);
  CHECK(eval_block.find("decrypt(") == std::string::npos);
  CHECK(eval_block.find("eval_xor") != std::string::npos);
  CHECK(eval_block.find("eval_and") != std::string::npos);
}

// SPDX-License-Identifier: Apache-2.0
#include "qfed/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include "qfed/aggadder.hpp"
#include "qfed/che.hpp"
#include "qfed/error.hpp"
#include "qfed/qnn.hpp"
#include "qfed/qotp.hpp"
#include "qfed/terngrad.hpp"

namespace qfed::fedsim {

namespace {

// Cheap classical bookkeeping ops (plaintext mask replay, XOR unmask,
// applying the update) are charged a fraction of one latency unit each.
constexpr double kBookkeepingOpUnit = 0.01;
// Serialized ciphertext bit: u64 nonce + masked byte + u64 key id.
constexpr double kCheBitBytes = 17.0;
// Update metadata framing, matching the sparse wire header size.
constexpr double kHeaderBytes = 17.0;
constexpr double kScaleBytes = 4.0;
constexpr double kIndexBytes = 4.0;

int ceil_log2(int n) {
  int w = 0;
  while ((1 << w) < n) ++w;
  return w;
}

long long centered(std::uint64_t m, int width) {
  const long long full = 1ll << width;
  const long long half = 1ll << (width - 1);
  const long long v = static_cast<long long>(m);
  return v >= half ? v - full : v;
}

std::uint32_t twos_complement(long long v, int width) {
  const std::uint64_t mask = (std::uint64_t(1) << width) - 1;
  return static_cast<std::uint32_t>(static_cast<std::uint64_t>(v) & mask);
}

struct PendingOperand {
  int client = 0;
  std::uint32_t encoded = 0;
  qotp::PauliKey key;
  std::vector<che::CheBit> key_z;
  std::vector<che::CheBit> key_x;
};

}  // namespace

const std::vector<std::string> kStepNames = {
    "local_train", "qotp_encrypt", "che_compute", "upload",
    "aggregate",   "download",     "decrypt",     "model_update"};

FedConfig FedConfig::from_kv(const config::KvMap& kv) {
  config::KvReader r(kv);
  FedConfig c;
  c.task = r.get_string("task", c.task);
  c.workflow = r.get_string("workflow", c.workflow);
  c.quant = r.get_string("quant", c.quant);
  c.clients = static_cast<int>(r.get_int("clients", c.clients));
  c.rounds = static_cast<int>(r.get_int("rounds", c.rounds));
  c.local_steps = static_cast<int>(r.get_int("local_steps", c.local_steps));
  c.batch = static_cast<int>(r.get_int("batch", c.batch));
  c.lr = r.get_double("lr", c.lr);
  c.width = static_cast<int>(r.get_int("width", c.width));
  c.digit_width = static_cast<int>(r.get_int("digit_width", c.digit_width));
  c.qubit_byte_cost = r.get_double("qubit_byte_cost", c.qubit_byte_cost);
  c.seed = r.get_u64("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

config::KvMap FedConfig::to_kv() const {
  char buf[64];
  config::KvMap kv;
  kv["task"] = task;
  kv["workflow"] = workflow;
  kv["quant"] = quant;
  kv["clients"] = std::to_string(clients);
  kv["rounds"] = std::to_string(rounds);
  kv["local_steps"] = std::to_string(local_steps);
  kv["batch"] = std::to_string(batch);
  std::snprintf(buf, sizeof buf, "%.17g", lr);
  kv["lr"] = buf;
  kv["width"] = std::to_string(width);
  kv["digit_width"] = std::to_string(digit_width);
  std::snprintf(buf, sizeof buf, "%.17g", qubit_byte_cost);
  kv["qubit_byte_cost"] = buf;
  kv["seed"] = std::to_string(seed);
  return kv;
}

int FedConfig::effective_width() const {
  if (width > 0) return width;
  if (quant == "dense") return digit_width + ceil_log2(std::max(clients, 1));
  int w = 2;
  while ((1 << (w - 1)) - 1 < clients) ++w;
  return w;
}

void FedConfig::validate() const {
  if (task != "blobs" && task != "stateprep" && task != "qubo")
    throw Error("unknown task: " + task);
  if (workflow != "baseline" && workflow != "cryptoqfl" &&
      workflow != "centralized")
    throw Error("unknown workflow: " + workflow);
  if (quant != "ternary" && quant != "dense")
    throw Error("unknown quantization: " + quant);
  if (clients < 1) throw Error("need at least one client");
  if (rounds < 1) throw Error("need at least one round");
  if (local_steps < 1) throw Error("need at least one local step");
  if (batch < 0) throw Error("batch must be nonnegative");
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  if (digit_width < 2 || digit_width > 16)
    throw Error("digit width out of range");
  if (qubit_byte_cost < 0.0) throw Error("qubit byte cost must be >= 0");
  if (width != 0 && (width < 2 || width > 15))
    throw Error("accumulator width out of range");

  if (workflow == "centralized") return;
  const int w = effective_width();
  const long long headroom = (1ll << (w - 1)) - 1;
  if (quant == "ternary") {
    if (clients > headroom)
      throw Error("accumulator too narrow: " + std::to_string(clients) +
                  " clients need |sum| <= " + std::to_string(headroom));
  } else {
    const long long digit_max = (1ll << (digit_width - 1)) - 1;
    if (static_cast<long long>(clients) * digit_max > headroom)
      throw Error("accumulator too narrow for dense digits: need " +
                  std::to_string(clients * digit_max) + " <= " +
                  std::to_string(headroom));
  }
  if (2 * w + 1 > qsim::kMaxQubits)
    throw Error("accumulator register needs " + std::to_string(2 * w + 1) +
                " qubits, over the simulator limit of " +
                std::to_string(qsim::kMaxQubits));
}

std::uint64_t FedConfig::hash() const {
  return config::fnv1a64(config::canonical_text(to_kv()));
}

namespace {

class Engine {
 public:
  explicit Engine(const FedConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    task_ = qnn::make_task(cfg_.task, cfg_.seed);
    n_params_ = task_->param_count();
    width_ = cfg_.effective_width();
    digit_max_ = cfg_.quant == "dense" ? (1ll << (cfg_.digit_width - 1)) - 1
                                       : 1ll;

    if (task_->train_count() > 0) {
      if (std::size_t(cfg_.clients) > task_->train_count())
        throw Error("more clients than training samples");
      shards_.resize(cfg_.clients);
      for (std::size_t i = 0; i < task_->train_count(); ++i)
        shards_[i % cfg_.clients].push_back(i);
    } else {
      shards_.assign(cfg_.clients, {});
    }

    const qsim::Circuit adder = aggadder::build_adder(width_);
    const aggadder::GateCostModel costs;
    adder_gates_ = static_cast<int>(adder.gates.size());
    // Teardown resets hit distinct wires, so they overlap completely in
    // the earliest-start schedule.
    per_add_latency_ = aggadder::circuit_latency(adder, costs) + costs.reset;

    Rng init(Rng::derive(cfg_.seed, stream::kInit));
    theta_.resize(n_params_);
    for (double& v : theta_)
      v = (2.0 * init.uniform() - 1.0) * 0.1 * 3.14159265358979323846;
  }

  RunResult run() {
    RunResult out;
    out.config = cfg_;
    for (int r = 0; r < cfg_.rounds; ++r) {
      if (cfg_.workflow == "centralized")
        centralized_round(out, r);
      else
        federated_round(out, r);
    }
    for (const StepRow& row : out.rows) {
      out.total_latency += row.latency;
      out.bytes_total += row.bytes_up + row.bytes_down;
      out.latency_by_step[row.step] += row.latency;
    }
    out.final_theta = theta_;
    out.final_loss = out.round_stats.back().loss;
    out.final_accuracy = out.round_stats.back().accuracy;
    out.quantum_payload_ratio =
        payload_qubits_ > 0.0 ? payload_float_bits_ / payload_qubits_ : 0.0;
    return out;
  }

 private:
  // One gradient evaluation runs the circuit twice per parameter for the
  // shift rule plus once forward.
  double grad_executions() const { return 2.0 * n_params_ + 1.0; }

  std::vector<std::size_t> pick_batch(int client, Rng& rng) const {
    const auto& shard = shards_[client];
    if (shard.empty()) return {};
    if (cfg_.batch == 0 || std::size_t(cfg_.batch) >= shard.size())
      return shard;
    std::vector<std::size_t> idx(cfg_.batch);
    for (std::size_t& i : idx) i = shard[rng.below(shard.size())];
    return idx;
  }

  // Local descent; returns the accumulated update direction
  // (theta_before - theta_after) / lr, wrapped per component.
  std::vector<double> local_update(int client, int round, double* latency) {
    Rng rng(Rng::derive(cfg_.seed, stream::kBatch, client, round));
    std::vector<double> local = theta_;
    double executions = 0.0;
    for (int s = 0; s < cfg_.local_steps; ++s) {
      const std::vector<std::size_t> idx = pick_batch(client, rng);
      const std::vector<double> g = task_->gradient(local, idx);
      qnn::sgd_step(local, g, cfg_.lr);
      executions += std::max<std::size_t>(idx.size(), 1) * grad_executions();
    }
    *latency = executions;
    std::vector<double> u(n_params_);
    for (int i = 0; i < n_params_; ++i)
      u[i] = terngrad::cyclic_wrap(theta_[i] - local[i], qnn::kParamPeriod) /
             cfg_.lr;
    return u;
  }

  std::vector<long long> quantize(const std::vector<double>& u, float scale,
                                  int client, int round) const {
    std::vector<long long> digits(n_params_, 0);
    if (scale == 0.0f) return digits;
    if (cfg_.quant == "ternary") {
      Rng rng(Rng::derive(cfg_.seed, stream::kQuant, client, round));
      const terngrad::TernaryUpdate t =
          terngrad::ternarize_with_scale(u, scale, rng);
      for (int i = 0; i < n_params_; ++i) digits[i] = t.t[i];
    } else {
      for (int i = 0; i < n_params_; ++i) {
        long long v = std::llround(u[i] / scale * double(digit_max_));
        digits[i] = std::clamp(v, -digit_max_, digit_max_);
      }
    }
    return digits;
  }

  void centralized_round(RunResult& out, int round) {
    std::vector<std::size_t> all(task_->train_count());
    std::iota(all.begin(), all.end(), 0);
    double executions = 0.0;
    for (int s = 0; s < cfg_.local_steps; ++s) {
      const std::vector<double> g = task_->gradient(theta_, all);
      qnn::sgd_step(theta_, g, cfg_.lr);
      executions += std::max<std::size_t>(all.size(), 1) * grad_executions();
    }
    std::vector<StepRow> rows(kStepNames.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].round = round;
      rows[i].step = kStepNames[i];
    }
    rows[0].latency = executions;
    rows[7].latency = n_params_ * kBookkeepingOpUnit;
    finish_round(out, round, std::move(rows));
  }

  void federated_round(RunResult& out, int round) {
    const int n = cfg_.clients;
    const bool use_che = cfg_.workflow == "baseline";
    const int w = width_;

    std::vector<StepRow> rows(kStepNames.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].round = round;
      rows[i].step = kStepNames[i];
    }

    // Local training, client-parallel.
    std::vector<std::vector<double>> updates(n);
    for (int c = 0; c < n; ++c) {
      double lat = 0.0;
      updates[c] = local_update(c, round, &lat);
      rows[0].latency = std::max(rows[0].latency, lat);
    }

    // Scale consensus: everyone proposes its local max, the largest wins.
    double raw_scale = 0.0;
    for (const auto& u : updates)
      for (double v : u) raw_scale = std::max(raw_scale, std::abs(v));
    const float scale = static_cast<float>(raw_scale);

    std::vector<std::vector<long long>> digits(n);
    for (int c = 0; c < n; ++c)
      digits[c] = quantize(updates[c], scale, c, round);

    // Shipped operand count per client: sparse for ternary, every
    // parameter for dense.
    std::vector<long long> shipped(n, 0);
    for (int c = 0; c < n; ++c) {
      if (cfg_.quant == "dense") {
        shipped[c] = n_params_;
      } else {
        for (long long d : digits[c]) shipped[c] += d != 0;
      }
    }

    // Round ciphertext infrastructure. The classical homomorphic keypair
    // is shared by all clients of the round; the shared-seed workflow
    // replaces it with a pad seed the server never learns.
    Rng che_rng(Rng::derive(cfg_.seed, stream::kChe, round));
    const che::CheKeypair keypair = che::generate_keypair(che_rng);
    const std::uint64_t round_pad_seed =
        Rng::derive(cfg_.seed, stream::kRoundSeed, round);

    std::vector<std::shared_ptr<che::CheMeter>> client_meters;
    for (int c = 0; c < n; ++c)
      client_meters.push_back(std::make_shared<che::CheMeter>());

    // Client-side masking, parameter-ascending per client.
    std::vector<std::vector<PendingOperand>> per_param(n_params_);
    for (int c = 0; c < n; ++c) {
      Rng pad_rng = use_che
                        ? Rng(Rng::derive(cfg_.seed, stream::kPad, c, round))
                        : Rng(Rng::derive(round_pad_seed, c));
      che::CheSession session(keypair, client_meters[c]);
      for (int i = 0; i < n_params_; ++i) {
        if (cfg_.quant == "ternary" && digits[c][i] == 0) continue;
        PendingOperand op;
        op.client = c;
        op.encoded = twos_complement(digits[c][i], w);
        op.key = qotp::random_key(w, pad_rng);
        if (use_che) {
          for (int b = 0; b < w; ++b)
            op.key_z.push_back(session.encrypt(op.key.z[b], pad_rng));
          for (int b = 0; b < w; ++b)
            op.key_x.push_back(session.encrypt(op.key.x[b], pad_rng));
        }
        per_param[i].push_back(std::move(op));
      }
    }

    // Server aggregation, parameter-major, clients in ascending id order.
    Rng server_rng(Rng::derive(cfg_.seed, stream::kServer, round));
    auto server_meter = std::make_shared<che::CheMeter>();
    auto gadget_meter = std::make_shared<qhe::GadgetMeter>();
    std::vector<std::uint64_t> cipher(n_params_, 0);
    std::vector<std::vector<che::CheBit>> down_x(n_params_);
    std::vector<qotp::PauliKey> replayed_x(n_params_);
    long long adds = 0;
    for (int i = 0; i < n_params_; ++i) {
      aggadder::EncryptedAccumulator acc =
          use_che ? aggadder::EncryptedAccumulator::with_che(
                        w, keypair, server_meter, gadget_meter)
                  : aggadder::EncryptedAccumulator::with_frame(w,
                                                               gadget_meter);
      std::vector<qotp::PauliKey> add_order_keys;
      for (const PendingOperand& op : per_param[i]) {
        const aggadder::MaskedValue masked =
            aggadder::mask_value(w, op.encoded, op.key);
        if (use_che)
          acc.add_operand(masked.state, op.key_z, op.key_x, server_rng);
        else
          acc.add_operand(masked.state, op.key, server_rng);
        add_order_keys.push_back(op.key);
        ++adds;
      }
      cipher[i] = acc.acc_cipher().index();
      if (use_che) {
        down_x[i] = acc.acc_key_x();
      } else {
        // Key-holder side bookkeeping: every client can rebuild this from
        // the shared pad seed and the public gate log.
        replayed_x[i] = aggadder::EncryptedAccumulator::slice_acc_key(
            aggadder::EncryptedAccumulator::replay_aggregation_key(
                w, add_order_keys),
            w);
      }
    }

    // Client-side unmasking. Under ciphertext keys every client decrypts
    // the accumulator's x bits; under the shared seed the replay above is
    // the client's work, repriced as plaintext bookkeeping.
    std::vector<long long> sums(n_params_, 0);
    for (int i = 0; i < n_params_; ++i) {
      std::uint64_t xbits = 0;
      if (use_che) {
        for (int c = 0; c < n; ++c) {
          che::CheSession session(keypair, client_meters[c]);
          std::uint64_t mine = 0;
          for (int b = 0; b < w; ++b)
            mine |= std::uint64_t(session.decrypt(down_x[i][b])) << b;
          xbits = mine;
        }
      } else {
        for (int b = 0; b < w; ++b)
          xbits |= std::uint64_t(replayed_x[i].x[b]) << b;
      }
      sums[i] = centered(cipher[i] ^ xbits, w);
      const long long bound = cfg_.quant == "ternary"
                                  ? cfg_.clients
                                  : cfg_.clients * digit_max_;
      if (sums[i] < -bound || sums[i] > bound)
        throw Error("aggregate outside the provable range; overflow");
    }

    // Model update from the decoded mean.
    std::vector<double> mean_update(n_params_, 0.0);
    if (scale != 0.0f) {
      const double denom = double(cfg_.clients) * double(digit_max_);
      for (int i = 0; i < n_params_; ++i)
        mean_update[i] = double(scale) * double(sums[i]) / denom;
    }
    for (int i = 0; i < n_params_; ++i)
      theta_[i] = terngrad::cyclic_wrap(
          theta_[i] - cfg_.lr * mean_update[i], qnn::kParamPeriod);

    // Accounting.
    long long shipped_total = 0;
    for (int c = 0; c < n; ++c) shipped_total += shipped[c];

    for (int c = 0; c < n; ++c) {
      rows[1].latency =
          std::max(rows[1].latency, double(shipped[c]) * double(w));
      payload_float_bits_ += 32.0 * double(n_params_);
      payload_qubits_ += double(shipped[c]) * double(w);
    }

    if (use_che) {
      double client_peak = 0.0;
      for (int c = 0; c < n; ++c)
        client_peak =
            std::max(client_peak, double(client_meters[c]->units()));
      const double server_units = double(server_meter->units());
      rows[2].latency = client_peak + server_units;
      server_che_latency_accum_ += server_units;
    } else {
      const double replay_ops =
          double(adds) * double(adder_gates_ + 2 * w + 1);
      rows[2].latency = replay_ops * kBookkeepingOpUnit;
    }

    for (int c = 0; c < n; ++c) {
      double up = kHeaderBytes + kScaleBytes +
                  double(shipped[c]) * double(w) * cfg_.qubit_byte_cost;
      if (cfg_.quant == "ternary") up += kIndexBytes * double(shipped[c]);
      if (use_che) up += double(shipped[c]) * 2.0 * w * kCheBitBytes;
      rows[3].bytes_up += up;
      rows[3].latency = std::max(rows[3].latency, up);
    }

    rows[4].latency =
        double(adds) * per_add_latency_ + double(gadget_meter->units());

    const double cipher_bytes = double(n_params_) * std::ceil(w / 8.0);
    for (int c = 0; c < n; ++c) {
      double down = cipher_bytes + kScaleBytes;
      if (use_che)
        down += double(n_params_) * 2.0 * w * kCheBitBytes;
      else
        down += kIndexBytes * double(shipped_total);
      rows[5].bytes_down += down;
      rows[5].latency += down;  // one server serializes the sends
    }

    rows[6].latency = double(n_params_) * double(w) * kBookkeepingOpUnit;
    rows[7].latency = double(n_params_) * kBookkeepingOpUnit;

    out.aggregates.push_back(std::move(sums));
    finish_round(out, round, std::move(rows));
  }

  void finish_round(RunResult& out, int round, std::vector<StepRow> rows) {
    (void)round;
    RoundStats stats;
    stats.loss = task_->eval_loss(theta_);
    stats.accuracy = task_->accuracy(theta_);
    rows.back().loss = stats.loss;
    rows.back().accuracy = stats.accuracy;
    out.round_stats.push_back(stats);
    for (StepRow& row : rows) out.rows.push_back(std::move(row));
    out.server_che_latency = server_che_latency_accum_;
  }

  FedConfig cfg_;
  std::unique_ptr<qnn::Task> task_;
  int n_params_ = 0;
  int width_ = 0;
  long long digit_max_ = 1;
  int adder_gates_ = 0;
  double per_add_latency_ = 0.0;
  std::vector<std::vector<std::size_t>> shards_;
  std::vector<double> theta_;
  double payload_float_bits_ = 0.0;
  double payload_qubits_ = 0.0;
  double server_che_latency_accum_ = 0.0;
};

}  // namespace

RunResult run(const FedConfig& cfg) { return Engine(cfg).run(); }

std::string metrics_csv(const RunResult& r) {
  std::string out = "round,step,latency_units,bytes_up,bytes_down,loss,accuracy\n";
  char buf[256];
  for (const StepRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%.10g,", row.round,
                  row.step.c_str(), row.latency, row.bytes_up,
                  row.bytes_down);
    out += buf;
    if (row.loss) {
      std::snprintf(buf, sizeof buf, "%.10g", *row.loss);
      out += buf;
    }
    out += ',';
    if (row.accuracy) {
      std::snprintf(buf, sizeof buf, "%.10g", *row.accuracy);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace qfed::fedsim

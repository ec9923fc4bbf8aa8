// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfed/config.hpp"

// End-to-end federated training driver.
//
// Workflows:
//  * baseline    quantized updates ride to the server as one-time-pad
//                masked registers; mask bits travel alongside under
//                classical homomorphic encryption and the server advances
//                them homomorphically while it runs the quantum adder.
//  * cryptoqfl   same quantum aggregation, but every client derives the
//                round's pad keys from a seed they share (the server never
//                sees it), so the final mask is recomputed client side by
//                replaying the public gate log. No ciphertext key algebra
//                anywhere, which removes the server's crypto latency and
//                the key-blob traffic.
//  * centralized one node, exact gradients, no quantization or crypto;
//                the quality yardstick.
//
// Training and quantization random streams are derived from (seed, client,
// round) only, never from the workflow, so baseline and cryptoqfl produce
// bit-identical aggregates and model trajectories by construction.
namespace qfed::fedsim {

// Stream purposes, fixed as part of the reproducibility contract. Every
// random draw in a run comes from Rng(Rng::derive(seed, tag, ...)) with
// one of these tags, so an external replica can reproduce any piece:
//  * kInit: initial parameters, uniform in +-0.1 pi.
//  * kBatch (client, round): minibatch sampling during local training.
//  * kQuant (client, round): ternarization draws.
//  * kPad (client, round): pad keys and ciphertext nonces, baseline only.
//  * kRoundSeed (round): the shared pad seed; client c's pad stream is
//    Rng(Rng::derive(round_seed, c)). Shared-seed workflow only.
//  * kServer (round): server-side reset draws during aggregation.
//  * kChe (round): the round's classical homomorphic keypair.
// Training data shards are fixed by client id: sample i belongs to client
// i mod clients.
namespace stream {
inline constexpr std::uint64_t kInit = 0x696e6974;
inline constexpr std::uint64_t kBatch = 0x62617463;
inline constexpr std::uint64_t kQuant = 0x7175616e;
inline constexpr std::uint64_t kPad = 0x6f747000;
inline constexpr std::uint64_t kRoundSeed = 0x726f756e;
inline constexpr std::uint64_t kServer = 0x73727672;
inline constexpr std::uint64_t kChe = 0x63686500;
}  // namespace stream

struct FedConfig {
  std::string task = "blobs";        // blobs | stateprep | qubo
  std::string workflow = "cryptoqfl";  // baseline | cryptoqfl | centralized
  std::string quant = "ternary";     // ternary | dense
  int clients = 8;
  int rounds = 20;
  int local_steps = 1;
  int batch = 0;       // samples per local step; 0 = full shard
  double lr = 0.3;
  int width = 0;       // accumulator bits; 0 derives it from the rest
  int digit_width = 6;  // dense mode: bits per quantized component
  double qubit_byte_cost = 1.0;  // byte-equivalents charged per qubit sent
  std::uint64_t seed = 1;

  static FedConfig from_kv(const config::KvMap& kv);
  config::KvMap to_kv() const;
  void validate() const;

  // The accumulator width actually used: the configured one, or the
  // smallest that provably cannot overflow for this client count.
  int effective_width() const;

  // FNV fingerprint of the canonical key=value rendering.
  std::uint64_t hash() const;
};

// One accounting row. loss/accuracy are set on model_update rows only.
struct StepRow {
  int round = 0;
  std::string step;
  double latency = 0.0;
  double bytes_up = 0.0;
  double bytes_down = 0.0;
  std::optional<double> loss;
  std::optional<double> accuracy;
};

struct RoundStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct RunResult {
  FedConfig config;
  std::vector<StepRow> rows;
  std::vector<RoundStats> round_stats;
  std::vector<double> final_theta;
  // Decoded accumulator integers, per round then parameter. Empty for the
  // centralized workflow.
  std::vector<std::vector<long long>> aggregates;

  double total_latency = 0.0;
  double bytes_total = 0.0;
  std::map<std::string, double> latency_by_step;
  // The server-side ciphertext key algebra component, isolated because the
  // shared-seed workflow exists to drive it to zero.
  double server_che_latency = 0.0;
  // Classical float bits that would have gone up, divided by the qubits
  // that actually did.
  double quantum_payload_ratio = 0.0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
};

RunResult run(const FedConfig& cfg);

// "round,step,latency_units,bytes_up,bytes_down,loss,accuracy" rows;
// loss/accuracy cells are empty except on model_update rows.
std::string metrics_csv(const RunResult& r);

extern const std::vector<std::string> kStepNames;

}  // namespace qfed::fedsim

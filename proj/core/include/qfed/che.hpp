// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "qfed/rng.hpp"

// Classical homomorphic encryption over single bits, mocked for
// simulation.
//
// SECURITY: this is NOT a real homomorphic scheme and must never protect
// real data. Bits are masked with a keyed PRF built from an integer mixer,
// and the evaluator is handed the secret so it can compute on ciphertexts
// directly. What the mock preserves is the shape of the real thing: the
// ciphertext interface, which side may decrypt, and an exact operation
// count to drive the cost model. Treat it as accounting machinery only.
namespace qfed::che {

struct CheBit {
  std::uint64_t nonce = 0;
  std::uint8_t masked = 0;
  std::uint64_t key_id = 0;
};

bool operator==(const CheBit& a, const CheBit& b);

struct CheKeypair {
  std::uint64_t key_id = 0;
  std::uint64_t secret = 0;
};

CheKeypair generate_keypair(Rng& rng);

// Unmetered key-holder decryption. Exists for components that seal a
// keypair inside themselves and account for their work in other units;
// protocol code goes through CheSession so the meters stay honest.
int decrypt_raw(const CheKeypair& keys, const CheBit& c);

// Cost units per operation. Evaluated AND is expensive relative to XOR in
// every leveled scheme, so the model refuses to be told otherwise.
struct CheCostModel {
  std::int64_t encrypt_cost = 10;
  std::int64_t xor_cost = 1;
  std::int64_t and_cost = 100;
  std::int64_t decrypt_cost = 10;

  void validate() const;
};

// Shared operation counter. Accounting is exact integers; units() applies
// the cost model to the counts.
class CheMeter {
 public:
  explicit CheMeter(CheCostModel model = {});

  const CheCostModel& model() const { return model_; }
  std::int64_t encrypts() const { return n_encrypt_.load(); }
  std::int64_t xors() const { return n_xor_.load(); }
  std::int64_t ands() const { return n_and_.load(); }
  std::int64_t decrypts() const { return n_decrypt_.load(); }
  std::int64_t units() const;
  void reset();

 private:
  friend class CheSession;
  friend class CheEvaluator;
  CheCostModel model_;
  std::atomic<std::int64_t> n_encrypt_{0};
  std::atomic<std::int64_t> n_xor_{0};
  std::atomic<std::int64_t> n_and_{0};
  std::atomic<std::int64_t> n_decrypt_{0};
};

// Key holder's side: may encrypt fresh bits and decrypt. Each operation is
// charged to the meter.
class CheSession {
 public:
  CheSession(const CheKeypair& keys, std::shared_ptr<CheMeter> meter);

  std::uint64_t key_id() const { return keys_.key_id; }
  CheBit encrypt(int bit, Rng& rng) const;
  int decrypt(const CheBit& c) const;

 private:
  CheKeypair keys_;
  std::shared_ptr<CheMeter> meter_;
};

// Evaluator's side: computes on ciphertexts without a decrypt interface.
// The mock seals the secret inside; nothing here hands a plaintext back.
// Results are deterministic functions of the input ciphertexts, so a
// computation replayed over the same inputs reproduces bit for bit.
class CheEvaluator {
 public:
  CheEvaluator(const CheKeypair& keys, std::shared_ptr<CheMeter> meter);

  std::uint64_t key_id() const { return key_id_; }
  CheBit eval_xor(const CheBit& a, const CheBit& b) const;
  CheBit eval_and(const CheBit& a, const CheBit& b) const;
  // Ciphertext of a value the evaluator already knows (loading constants
  // into a computation). Deterministic on purpose.
  CheBit encrypt_known(int bit) const;

 private:
  std::uint64_t key_id_;
  std::uint64_t secret_;
  std::shared_ptr<CheMeter> meter_;
};

}  // namespace qfed::che

// SPDX-License-Identifier: Apache-2.0
#include "qfed/che.hpp"

#include <string>

#include "qfed/error.hpp"

namespace qfed::che {

namespace {

// Keyed PRF over one word. An integer mixer, not a cryptographic
// primitive; see the header warning.
std::uint64_t prf(std::uint64_t secret, std::uint64_t m) {
  return Rng::mix(secret ^ Rng::mix(m ^ 0x9e3779b97f4a7c15ull));
}

std::uint64_t prf3(std::uint64_t secret, std::uint64_t a, std::uint64_t b,
                   std::uint64_t op) {
  return prf(secret, Rng::mix(a) ^ Rng::mix(Rng::mix(b) ^ op));
}

int mask_bit(std::uint64_t secret, std::uint64_t nonce) {
  return int(prf(secret, nonce) & 1);
}

void check_key(std::uint64_t want, const CheBit& c, const char* who) {
  if (c.key_id != want) {
    throw Error(std::string(who) + ": ciphertext under key " +
                std::to_string(c.key_id) + ", holder has key " +
                std::to_string(want));
  }
}

}  // namespace

bool operator==(const CheBit& a, const CheBit& b) {
  return a.nonce == b.nonce && a.masked == b.masked && a.key_id == b.key_id;
}

CheKeypair generate_keypair(Rng& rng) {
  CheKeypair k;
  do {
    k.key_id = rng.next_u64();
  } while (k.key_id == 0);
  k.secret = rng.next_u64();
  return k;
}

int decrypt_raw(const CheKeypair& keys, const CheBit& c) {
  check_key(keys.key_id, c, "decrypt_raw");
  return (c.masked ^ mask_bit(keys.secret, c.nonce)) & 1;
}

void CheCostModel::validate() const {
  if (encrypt_cost < 0 || xor_cost < 0 || and_cost < 0 || decrypt_cost < 0) {
    throw Error("negative cost in the encrypted-bit cost model");
  }
  if (and_cost < xor_cost) {
    throw Error("evaluated AND cheaper than XOR is not a plausible model");
  }
}

CheMeter::CheMeter(CheCostModel model) : model_(model) { model_.validate(); }

std::int64_t CheMeter::units() const {
  return n_encrypt_.load() * model_.encrypt_cost +
         n_xor_.load() * model_.xor_cost + n_and_.load() * model_.and_cost +
         n_decrypt_.load() * model_.decrypt_cost;
}

void CheMeter::reset() {
  n_encrypt_.store(0);
  n_xor_.store(0);
  n_and_.store(0);
  n_decrypt_.store(0);
}

CheSession::CheSession(const CheKeypair& keys, std::shared_ptr<CheMeter> meter)
    : keys_(keys), meter_(std::move(meter)) {
  if (keys_.key_id == 0) throw Error("session needs a generated keypair");
  if (!meter_) throw Error("session needs a meter");
}

CheBit CheSession::encrypt(int bit, Rng& rng) const {
  if (bit != 0 && bit != 1) {
    throw Error("encrypt takes a bit, got " + std::to_string(bit));
  }
  CheBit c;
  c.nonce = rng.next_u64();
  c.masked = std::uint8_t(bit ^ mask_bit(keys_.secret, c.nonce));
  c.key_id = keys_.key_id;
  meter_->n_encrypt_.fetch_add(1);
  return c;
}

int CheSession::decrypt(const CheBit& c) const {
  check_key(keys_.key_id, c, "decrypt");
  meter_->n_decrypt_.fetch_add(1);
  return (c.masked ^ mask_bit(keys_.secret, c.nonce)) & 1;
}

CheEvaluator::CheEvaluator(const CheKeypair& keys,
                           std::shared_ptr<CheMeter> meter)
    : key_id_(keys.key_id), secret_(keys.secret), meter_(std::move(meter)) {
  if (key_id_ == 0) throw Error("evaluator needs a generated keypair");
  if (!meter_) throw Error("evaluator needs a meter");
}

namespace {
constexpr std::uint64_t kOpXor = 1;
constexpr std::uint64_t kOpAnd = 2;
constexpr std::uint64_t kOpKnown = 3;
}  // namespace

CheBit CheEvaluator::eval_xor(const CheBit& a, const CheBit& b) const {
  check_key(key_id_, a, "eval_xor");
  check_key(key_id_, b, "eval_xor");
  const int pa = (a.masked ^ mask_bit(secret_, a.nonce)) & 1;
  const int pb = (b.masked ^ mask_bit(secret_, b.nonce)) & 1;
  CheBit c;
  c.nonce = prf3(secret_, a.nonce, b.nonce, kOpXor);
  c.masked = std::uint8_t((pa ^ pb) ^ mask_bit(secret_, c.nonce));
  c.key_id = key_id_;
  meter_->n_xor_.fetch_add(1);
  return c;
}

CheBit CheEvaluator::eval_and(const CheBit& a, const CheBit& b) const {
  check_key(key_id_, a, "eval_and");
  check_key(key_id_, b, "eval_and");
  const int pa = (a.masked ^ mask_bit(secret_, a.nonce)) & 1;
  const int pb = (b.masked ^ mask_bit(secret_, b.nonce)) & 1;
  CheBit c;
  c.nonce = prf3(secret_, a.nonce, b.nonce, kOpAnd);
  c.masked = std::uint8_t((pa & pb) ^ mask_bit(secret_, c.nonce));
  c.key_id = key_id_;
  meter_->n_and_.fetch_add(1);
  return c;
}

CheBit CheEvaluator::encrypt_known(int bit) const {
  if (bit != 0 && bit != 1) {
    throw Error("encrypt_known takes a bit, got " + std::to_string(bit));
  }
  CheBit c;
  c.nonce = prf3(secret_, std::uint64_t(bit), 0, kOpKnown);
  c.masked = std::uint8_t(bit ^ mask_bit(secret_, c.nonce));
  c.key_id = key_id_;
  meter_->n_encrypt_.fetch_add(1);
  return c;
}

}  // namespace qfed::che

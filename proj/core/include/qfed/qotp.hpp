// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfed/qsim.hpp"
#include "qfed/rng.hpp"

// Quantum one-time pad: every qubit is masked by Z^z X^x with key bits
// (z, x) drawn uniformly. Averaged over all keys the ciphertext carries no
// information about the state; with the key, decryption is exact.
namespace qfed::qotp {

struct PauliKey {
  // One entry per qubit, each 0 or 1.
  std::vector<std::uint8_t> z;
  std::vector<std::uint8_t> x;

  static PauliKey zero(int n_qubits);
  int n_qubits() const { return int(z.size()); }
};

bool operator==(const PauliKey& a, const PauliKey& b);

PauliKey random_key(int n_qubits, Rng& rng);

// Bitwise XOR of both halves; encrypting with a then b equals encrypting
// once with xor_keys(a, b) up to global phase.
PauliKey xor_keys(const PauliKey& a, const PauliKey& b);

// Applies X^{x_i} then Z^{z_i} on each qubit.
void encrypt(qsim::StateVector& state, const PauliKey& key);

// Exact inverse of encrypt: Z^{z_i} then X^{x_i}.
void decrypt(qsim::StateVector& state, const PauliKey& key);

// Hex packing for key halves: hex digit j covers qubits 4j..4j+3 with
// qubit 4j as the digit's least significant bit. A key on n qubits uses
// ceil(n/4) digits and any spare bits in the last digit must be zero.
std::string bits_to_hex(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> hex_to_bits(const std::string& hex, int n_bits);

// "z:<hex> x:<hex>"
std::string format_key(const PauliKey& key);
PauliKey parse_key(const std::string& text, int n_qubits);

}  // namespace qfed::qotp

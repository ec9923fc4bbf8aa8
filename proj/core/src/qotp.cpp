// SPDX-License-Identifier: Apache-2.0
#include "qfed/qotp.hpp"

#include <cctype>
#include <sstream>

#include "qfed/error.hpp"

namespace qfed::qotp {

PauliKey PauliKey::zero(int n_qubits) {
  if (n_qubits < 1) {
    throw Error("key needs at least one qubit");
  }
  PauliKey k;
  k.z.assign(n_qubits, 0);
  k.x.assign(n_qubits, 0);
  return k;
}

bool operator==(const PauliKey& a, const PauliKey& b) {
  return a.z == b.z && a.x == b.x;
}

PauliKey random_key(int n_qubits, Rng& rng) {
  PauliKey k = PauliKey::zero(n_qubits);
  for (int i = 0; i < n_qubits; ++i) {
    k.z[i] = std::uint8_t(rng.bit());
    k.x[i] = std::uint8_t(rng.bit());
  }
  return k;
}

PauliKey xor_keys(const PauliKey& a, const PauliKey& b) {
  if (a.n_qubits() != b.n_qubits()) {
    throw Error("xor of keys on different register sizes");
  }
  PauliKey out = a;
  for (int i = 0; i < a.n_qubits(); ++i) {
    out.z[i] ^= b.z[i];
    out.x[i] ^= b.x[i];
  }
  return out;
}

namespace {

void check_size(const qsim::StateVector& state, const PauliKey& key) {
  if (key.n_qubits() != state.n_qubits()) {
    throw Error("key on " + std::to_string(key.n_qubits()) +
                " qubits does not fit state on " +
                std::to_string(state.n_qubits()));
  }
}

}  // namespace

void encrypt(qsim::StateVector& state, const PauliKey& key) {
  check_size(state, key);
  for (int i = 0; i < key.n_qubits(); ++i) {
    if (key.x[i]) qsim::apply_gate(state, qsim::Gate::x(i));
    if (key.z[i]) qsim::apply_gate(state, qsim::Gate::z(i));
  }
}

void decrypt(qsim::StateVector& state, const PauliKey& key) {
  check_size(state, key);
  for (int i = 0; i < key.n_qubits(); ++i) {
    if (key.z[i]) qsim::apply_gate(state, qsim::Gate::z(i));
    if (key.x[i]) qsim::apply_gate(state, qsim::Gate::x(i));
  }
}

std::string bits_to_hex(const std::vector<std::uint8_t>& bits) {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t j = 0; j * 4 < bits.size(); ++j) {
    int v = 0;
    for (std::size_t t = 0; t < 4 && 4 * j + t < bits.size(); ++t) {
      if (bits[4 * j + t] & 1) v |= 1 << t;
    }
    out += digits[v];
  }
  return out;
}

std::vector<std::uint8_t> hex_to_bits(const std::string& hex, int n_bits) {
  if (n_bits < 1) {
    throw Error("hex unpack needs a positive bit count");
  }
  const std::size_t want = (std::size_t(n_bits) + 3) / 4;
  if (hex.size() != want) {
    throw Error("hex string \"" + hex + "\" has " +
                std::to_string(hex.size()) + " digits, expected " +
                std::to_string(want));
  }
  std::vector<std::uint8_t> bits(n_bits, 0);
  for (std::size_t j = 0; j < hex.size(); ++j) {
    const char c = char(std::tolower(static_cast<unsigned char>(hex[j])));
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else {
      throw Error(std::string("bad hex digit '") + hex[j] + "'");
    }
    for (std::size_t t = 0; t < 4; ++t) {
      const std::size_t idx = 4 * j + t;
      if (idx < std::size_t(n_bits)) {
        bits[idx] = std::uint8_t((v >> t) & 1);
      } else if ((v >> t) & 1) {
        throw Error("hex string \"" + hex + "\" sets bits past " +
                    std::to_string(n_bits));
      }
    }
  }
  return bits;
}

std::string format_key(const PauliKey& key) {
  return "z:" + bits_to_hex(key.z) + " x:" + bits_to_hex(key.x);
}

PauliKey parse_key(const std::string& text, int n_qubits) {
  std::istringstream in(text);
  std::string ztok, xtok, extra;
  if (!(in >> ztok >> xtok) || in >> extra) {
    throw Error("key text must be \"z:<hex> x:<hex>\", got \"" + text + "\"");
  }
  if (ztok.rfind("z:", 0) != 0 || xtok.rfind("x:", 0) != 0) {
    throw Error("key text must be \"z:<hex> x:<hex>\", got \"" + text + "\"");
  }
  PauliKey k;
  k.z = hex_to_bits(ztok.substr(2), n_qubits);
  k.x = hex_to_bits(xtok.substr(2), n_qubits);
  return k;
}

}  // namespace qfed::qotp

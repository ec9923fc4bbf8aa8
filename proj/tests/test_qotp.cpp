// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qfed/qotp.hpp"
#include "qfed/qsim.hpp"

using namespace qfed;
using qsim::complex;
using qsim::StateVector;

TEST_CASE("mask and unmask are exact inverses") {
  Rng rng(21);
  for (int n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      StateVector s = oracle::random_state(n, rng);
      const StateVector original = s;
      const qotp::PauliKey key = qotp::random_key(n, rng);
      qotp::encrypt(s, key);
      qotp::decrypt(s, key);
      CHECK(oracle::max_abs_diff(s.amplitudes(), original.amplitudes()) <
            1e-12);
    }
  }
}

TEST_CASE("mask application matches the dense matrix reference") {
  Rng rng(22);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 4;
    StateVector s = oracle::random_state(n, rng);
    const qotp::PauliKey key = qotp::random_key(n, rng);

    qsim::Circuit c(n);
    for (int i = 0; i < n; ++i) {
      if (key.x[i]) c.append(qsim::Gate::x(i));
      if (key.z[i]) c.append(qsim::Gate::z(i));
    }
    std::vector<complex> want = oracle::apply_circuit(c, s.amplitudes());
    qotp::encrypt(s, key);
    CHECK(oracle::max_abs_diff(s.amplitudes(), want) < 1e-12);
  }
}

TEST_CASE("two masks compose to their xor up to global phase") {
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3;
    StateVector s = oracle::random_state(n, rng);
    StateVector t = s;
    const qotp::PauliKey k1 = qotp::random_key(n, rng);
    const qotp::PauliKey k2 = qotp::random_key(n, rng);

    qotp::encrypt(s, k1);
    qotp::encrypt(s, k2);
    qotp::encrypt(t, qotp::xor_keys(k1, k2));
    CHECK(qsim::fidelity(s, t) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("averaging over every key yields the maximally mixed state") {
  // For each random input, sum the encrypted density matrices over all
  // 4^n keys; the result must be the identity over 2^n within 1e-12.
  Rng rng(24);
  for (int n = 1; n <= 2; ++n) {
    const std::uint64_t dim = std::uint64_t(1) << n;
    const int key_count = 1 << (2 * n);
    for (int rep = 0; rep < 20; ++rep) {
      StateVector input = oracle::random_state(n, rng);
      std::vector<std::vector<complex>> rho(
          dim, std::vector<complex>(dim, complex(0.0, 0.0)));
      for (int mask = 0; mask < key_count; ++mask) {
        qotp::PauliKey key = qotp::PauliKey::zero(n);
        for (int i = 0; i < n; ++i) {
          key.z[i] = std::uint8_t((mask >> (2 * i)) & 1);
          key.x[i] = std::uint8_t((mask >> (2 * i + 1)) & 1);
        }
        StateVector s = input;
        qotp::encrypt(s, key);
        for (std::uint64_t r = 0; r < dim; ++r) {
          for (std::uint64_t c = 0; c < dim; ++c) {
            rho[r][c] += s.amplitude(r) * std::conj(s.amplitude(c)) /
                         double(key_count);
          }
        }
      }
      for (std::uint64_t r = 0; r < dim; ++r) {
        for (std::uint64_t c = 0; c < dim; ++c) {
          const complex want =
              r == c ? complex(1.0 / double(dim), 0.0) : complex(0.0, 0.0);
          CHECK(std::abs(rho[r][c] - want) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("key hex packing") {
  // Digit j covers qubits 4j..4j+3, qubit 4j in the digit's low bit.
  std::vector<std::uint8_t> bits = {1, 0, 1, 1, 0};
  CHECK(qotp::bits_to_hex(bits) == "d0");
  CHECK(qotp::hex_to_bits("d0", 5) == bits);

  Rng rng(25);
  for (int n = 1; n <= 9; ++n) {
    const qotp::PauliKey key = qotp::random_key(n, rng);
    const qotp::PauliKey back = qotp::parse_key(qotp::format_key(key), n);
    CHECK(back == key);
  }

  CHECK_THROWS_AS(qotp::hex_to_bits("g", 4), Error);
  CHECK_THROWS_AS(qotp::hex_to_bits("ab", 4), Error);   // too long
  CHECK_THROWS_AS(qotp::hex_to_bits("f", 3), Error);    // spare bit set
  CHECK_THROWS_AS(qotp::parse_key("z:0 0", 4), Error);
  CHECK_THROWS_AS(qotp::parse_key("z:0 x:0 y:0", 4), Error);
}

TEST_CASE("key size mismatches are rejected") {
  Rng rng(26);
  StateVector s(3);
  CHECK_THROWS_AS(qotp::encrypt(s, qotp::random_key(2, rng)), Error);
  CHECK_THROWS_AS(qotp::decrypt(s, qotp::random_key(4, rng)), Error);
  CHECK_THROWS_AS(
      qotp::xor_keys(qotp::random_key(2, rng), qotp::random_key(3, rng)),
      Error);
}

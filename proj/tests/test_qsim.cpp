// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qfed/qsim.hpp"

using namespace qfed;
using namespace qfed::qsim;

namespace {

Gate random_unitary_gate(int n, Rng& rng) {
  static const GateKind pool[] = {
      GateKind::X,  GateKind::Z,  GateKind::H,  GateKind::P,
      GateKind::T,  GateKind::RX, GateKind::RY, GateKind::RZ,
      GateKind::CX, GateKind::CZ, GateKind::CCX,
  };
  for (;;) {
    const GateKind k = pool[rng.below(sizeof(pool) / sizeof(pool[0]))];
    if (gate_arity(k) > n) continue;
    Gate g;
    g.kind = k;
    std::set<int> used;
    for (int i = 0; i < gate_arity(k); ++i) {
      int w;
      do {
        w = int(rng.below(std::uint64_t(n)));
      } while (used.count(w));
      used.insert(w);
      g.q[i] = w;
    }
    if (gate_takes_angle(k)) g.angle = (rng.uniform() * 2.0 - 1.0) * 6.0;
    return g;
  }
}

}  // namespace

TEST_CASE("state construction and validation") {
  StateVector s(3);
  CHECK(s.n_qubits() == 3);
  CHECK(s.dim() == 8);
  CHECK(s.amplitude(0) == complex(1.0, 0.0));
  CHECK(s.norm() == doctest::Approx(1.0));

  CHECK_THROWS_AS(StateVector(0), Error);
  CHECK_THROWS_AS(StateVector(kMaxQubits + 1), Error);
  CHECK_THROWS_AS(StateVector::basis(2, 4), Error);
  CHECK_THROWS_AS(
      StateVector::from_amplitudes(2, std::vector<complex>(3)), Error);

  StateVector b = StateVector::basis(4, 9);
  CHECK(b.amplitude(9) == complex(1.0, 0.0));
  CHECK(b.basis_index().value() == 9);
}

TEST_CASE("qubit 0 is the least significant index bit") {
  StateVector s(2);
  apply_gate(s, Gate::x(0));
  CHECK(s.basis_index().value() == 1);
  apply_gate(s, Gate::x(1));
  CHECK(s.basis_index().value() == 3);

  Rng rng(7);
  StateVector t = StateVector::basis(2, 1);
  CHECK(measure_all(t, rng) == "10");  // qubit 0 first in the string
}

TEST_CASE("single gates act as their textbook matrices") {
  const double r = 1.0 / std::sqrt(2.0);

  StateVector s(1);
  apply_gate(s, Gate::h(0));
  CHECK(std::abs(s.amplitude(0) - complex(r, 0)) < 1e-12);
  CHECK(std::abs(s.amplitude(1) - complex(r, 0)) < 1e-12);

  apply_gate(s, Gate::p(0));
  CHECK(std::abs(s.amplitude(1) - complex(0, r)) < 1e-12);

  StateVector t(1);
  apply_gate(t, Gate::x(0));
  apply_gate(t, Gate::t(0));
  CHECK(std::abs(t.amplitude(1) - std::polar(1.0, std::acos(-1.0) / 4)) <
        1e-12);

  // RY(pi) takes |0> to |1> up to double rounding; the embedding layer
  // depends on this.
  StateVector u(1);
  apply_gate(u, Gate::ry(0, std::acos(-1.0)));
  CHECK(fidelity(u, StateVector::basis(1, 1)) == doctest::Approx(1.0));

  StateVector v(2);
  apply_gate(v, Gate::x(0));
  apply_gate(v, Gate::cx(0, 1));
  CHECK(v.basis_index().value() == 3);
  apply_gate(v, Gate::cz(0, 1));
  CHECK(std::abs(v.amplitude(3) - complex(-1, 0)) < 1e-12);

  StateVector w(3);
  apply_gate(w, Gate::x(0));
  apply_gate(w, Gate::x(1));
  apply_gate(w, Gate::ccx(0, 1, 2));
  CHECK(w.basis_index().value() == 7);
}

TEST_CASE("random circuits match the dense matrix reference") {
  for (int n = 1; n <= 5; ++n) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Rng rng(Rng::derive(100, n, seed));
      Circuit c(n);
      for (int d = 0; d < 30; ++d) c.append(random_unitary_gate(n, rng));

      StateVector s = oracle::random_state(n, rng);
      std::vector<complex> want = oracle::apply_circuit(c, s.amplitudes());
      run_circuit(s, c);
      CHECK(oracle::max_abs_diff(s.amplitudes(), want) < 1e-9);
    }
  }
}

TEST_CASE("gate and circuit wire validation") {
  Circuit c(2);
  CHECK_THROWS_AS(c.append(Gate::x(2)), Error);
  CHECK_THROWS_AS(c.append(Gate::x(-1)), Error);
  CHECK_THROWS_AS(c.append(Gate::cx(1, 1)), Error);
  CHECK_THROWS_AS(c.append(Gate::rx(0, std::nan(""))), Error);

  StateVector s(2);
  CHECK_THROWS_AS(apply_gate(s, Gate::ccx(0, 1, 2)), Error);
  Circuit c3(3);
  c3.append(Gate::x(2));
  CHECK_THROWS_AS(run_circuit(s, c3), Error);
  CHECK_THROWS_AS(apply_gate(s, Gate::reset(0)), Error);  // no rng given
}

TEST_CASE("measurement collapses and respects probabilities") {
  Rng rng(42);
  int ones = 0;
  const int trials = 400;
  for (int i = 0; i < trials; ++i) {
    StateVector s(1);
    apply_gate(s, Gate::h(0));
    const std::string bits = measure_all(s, rng);
    if (bits == "1") ++ones;
    // collapsed onto the observed basis state
    CHECK(s.basis_index().has_value());
  }
  CHECK(ones > trials / 4);
  CHECK(ones < 3 * trials / 4);

  StateVector bad = StateVector::from_amplitudes(
      1, {complex(0.5, 0.0), complex(0.0, 0.0)});
  CHECK_THROWS_AS(measure_all(bad, rng), Error);
}

TEST_CASE("reset forces a qubit to zero") {
  Rng rng(5);

  StateVector s = StateVector::basis(2, 3);
  reset_qubit(s, 0, rng);
  CHECK(s.basis_index().value() == 2);  // qubit 1 untouched

  // Entangled case: resetting one half collapses the other.
  for (int i = 0; i < 50; ++i) {
    StateVector bell(2);
    apply_gate(bell, Gate::h(0));
    apply_gate(bell, Gate::cx(0, 1));
    reset_qubit(bell, 0, rng);
    const auto idx = bell.basis_index();
    REQUIRE(idx.has_value());
    CHECK((idx.value() == 0 || idx.value() == 2));
  }
}

TEST_CASE("reset consumes exactly one draw even when deterministic") {
  Rng a(123), b(123);
  StateVector s(1);  // |0>, reset outcome is certain
  reset_qubit(s, 0, a);
  (void)b.uniform();
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("z expectation") {
  StateVector s(2);
  CHECK(expectation_z(s, 0) == doctest::Approx(1.0));
  apply_gate(s, Gate::x(1));
  CHECK(expectation_z(s, 1) == doctest::Approx(-1.0));
  apply_gate(s, Gate::h(0));
  CHECK(expectation_z(s, 0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(expectation_z(s, 2), Error);
}

TEST_CASE("fidelity ignores global phase") {
  Rng rng(9);
  StateVector a = oracle::random_state(3, rng);
  std::vector<complex> amps = a.amplitudes();
  const complex phase = std::polar(1.0, 1.234);
  for (auto& x : amps) x *= phase;
  StateVector b = StateVector::from_amplitudes(3, std::move(amps));
  CHECK(fidelity(a, b) == doctest::Approx(1.0));
  CHECK(fidelity(StateVector::basis(1, 0), StateVector::basis(1, 1)) ==
        doctest::Approx(0.0));
}

TEST_CASE("tensor product and extraction round trip") {
  Rng rng(11);
  StateVector a = oracle::random_state(2, rng);
  StateVector b = oracle::random_state(3, rng);
  StateVector ab = tensor_product(a, b);
  CHECK(ab.n_qubits() == 5);
  // index layout: a occupies the low bits
  CHECK(std::abs(ab.amplitude(1 + (5 << 2)) -
                 a.amplitude(1) * b.amplitude(5)) < 1e-12);

  StateVector b0 = StateVector::basis(3, 0);
  StateVector a_padded = tensor_product(a, b0);
  StateVector back = extract_qubits(a_padded, 0, 2);
  CHECK(oracle::max_abs_diff(back.amplitudes(), a.amplitudes()) < 1e-12);

  // Weight outside the slice is an error.
  StateVector ent(2);
  apply_gate(ent, Gate::h(0));
  apply_gate(ent, Gate::cx(0, 1));
  CHECK_THROWS_AS(extract_qubits(ent, 0, 1), Error);
}

TEST_CASE("circuit text round trip") {
  Circuit c(4);
  c.append(Gate::h(0))
      .append(Gate::cx(0, 1))
      .append(Gate::ccx(0, 1, 3))
      .append(Gate::rz(2, -2.718281828459045))
      .append(Gate::reset(1))
      .append(Gate::ry(3, 0.1));
  const std::string text = format_circuit(c);
  Circuit back = parse_circuit(text);
  REQUIRE(back.n_qubits == c.n_qubits);
  REQUIRE(back.gates.size() == c.gates.size());
  for (std::size_t i = 0; i < c.gates.size(); ++i) {
    CHECK(back.gates[i] == c.gates[i]);
  }
}

TEST_CASE("circuit text parsing details") {
  Circuit c = parse_circuit("# qubits 3\nX 0\n  cx 0,2  # comment\n");
  CHECK(c.n_qubits == 3);
  REQUIRE(c.gates.size() == 2);
  CHECK(c.gates[1] == Gate::cx(0, 2));

  // Without a header the register is sized by the highest wire used.
  CHECK(parse_circuit("CCX 1,2,4\n").n_qubits == 5);

  CHECK_THROWS_AS(parse_circuit("FOO 0\n"), Error);
  CHECK_THROWS_AS(parse_circuit("CX 0\n"), Error);
  CHECK_THROWS_AS(parse_circuit("CX 0,0\n"), Error);
  CHECK_THROWS_AS(parse_circuit("X 0 junk\n"), Error);
  CHECK_THROWS_AS(parse_circuit("RZ 0\n"), Error);
  CHECK_THROWS_AS(parse_circuit("X zero\n"), Error);
  CHECK_THROWS_AS(parse_circuit("# qubits 2\nX 5\n"), Error);
  CHECK_THROWS_AS(parse_circuit("# nothing here\n"), Error);
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qfed/error.hpp"
#include "qfed/rng.hpp"

// Dense state-vector simulator.
//
// Conventions used everywhere in this project:
//  * Qubit 0 is the least significant bit of the amplitude index
//    (little-endian). Basis index i assigns qubit q the bit (i >> q) & 1.
//  * Ket strings and measurement bitstrings list qubit 0 first, so |10>
//    means qubit0=1, qubit1=0 and corresponds to index 1.
//  * Global phase is never compared; state equality checks use fidelity.
namespace qfed::qsim {

using complex = std::complex<double>;

inline constexpr int kMaxQubits = 20;

enum class GateKind { X, Z, H, P, T, RX, RY, RZ, CX, CZ, CCX, Reset };

bool gate_takes_angle(GateKind k);
int gate_arity(GateKind k);
const char* gate_name(GateKind k);

struct Gate {
  GateKind kind = GateKind::X;
  // q[0..arity-1] are the wires. For CX: {control, target}. For CCX:
  // {control1, control2, target}. CZ is symmetric but order is preserved.
  std::array<int, 3> q = {-1, -1, -1};
  double angle = 0.0;

  int arity() const { return gate_arity(kind); }

  static Gate x(int t);
  static Gate z(int t);
  static Gate h(int t);
  static Gate p(int t);
  static Gate t(int tq);
  static Gate rx(int t, double angle);
  static Gate ry(int t, double angle);
  static Gate rz(int t, double angle);
  static Gate cx(int control, int target);
  static Gate cz(int a, int b);
  static Gate ccx(int control1, int control2, int target);
  static Gate reset(int t);
};

bool operator==(const Gate& a, const Gate& b);

struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;

  Circuit() = default;
  explicit Circuit(int n);

  // Validates wire indices and distinctness before accepting the gate.
  Circuit& append(const Gate& g);
};

class StateVector {
 public:
  // |0...0> on n qubits. Throws for n outside [1, kMaxQubits]; anything
  // larger than kMaxQubits is out of scope for this simulator by design.
  explicit StateVector(int n_qubits);

  static StateVector basis(int n_qubits, std::uint64_t index);
  static StateVector from_amplitudes(int n_qubits, std::vector<complex> amps);

  int n_qubits() const { return n_qubits_; }
  std::uint64_t dim() const { return std::uint64_t(1) << n_qubits_; }
  const std::vector<complex>& amplitudes() const { return amps_; }
  complex amplitude(std::uint64_t i) const { return amps_.at(i); }

  double norm() const;

  // If the state is a basis vector (one amplitude of unit magnitude, the
  // rest below tol), returns its index.
  std::optional<std::uint64_t> basis_index(double tol = 1e-9) const;

 private:
  int n_qubits_;
  std::vector<complex> amps_;

  friend void apply_gate(StateVector&, const Gate&, Rng*);
  friend void reset_qubit(StateVector&, int, Rng&);
  friend std::string measure_all(StateVector&, Rng&);
  friend StateVector tensor_product(const StateVector&, const StateVector&);
  friend StateVector extract_qubits(const StateVector&, int, int, double);
};

// Applies one gate in place. Reset is projective and needs the rng; passing
// a Reset gate without one is an error.
void apply_gate(StateVector& state, const Gate& g, Rng* rng = nullptr);

void run_circuit(StateVector& state, const Circuit& c, Rng* rng = nullptr);

// Projective measurement of every qubit; collapses the state and returns
// the outcome with qubit 0 as the first character.
std::string measure_all(StateVector& state, Rng& rng);

// Measures one qubit and forces it to |0> (applying X when the outcome
// was 1). The rest of the register collapses accordingly.
void reset_qubit(StateVector& state, int qubit, Rng& rng);

// Exact <Z> on one qubit: P(0) - P(1).
double expectation_z(const StateVector& state, int qubit);

// |<a|b>|; insensitive to global phase.
double fidelity(const StateVector& a, const StateVector& b);

// b's qubits are appended above a's: result index = ia + (ib << a.n).
StateVector tensor_product(const StateVector& a, const StateVector& b);

// Slices `count` qubits starting at `first` under the assumption that every
// other qubit is |0>; weight above `tol` elsewhere is an error.
StateVector extract_qubits(const StateVector& s, int first, int count,
                           double tol = 1e-9);

// Text format: one gate per line, "GATE q0[,q1[,q2]][ angle]", '#' starts a
// comment. format_circuit emits a "# qubits N" header which parse_circuit
// honors; otherwise the qubit count is inferred from the highest wire used.
Circuit parse_circuit(const std::string& text);
std::string format_circuit(const Circuit& c);

// Exact tracker for states that stay a single basis vector times a phase.
// X, CX, CCX permute the index; Z and CZ flip the sign; RESET projects.
// Constant work per gate instead of a pass over 2^n amplitudes, which is
// what makes wide adder registers affordable. RESET consumes one rng draw
// exactly like the dense path, so a dense and a tracked run sharing a
// seed stay in lockstep.
class BasisState {
 public:
  BasisState(int n_qubits, std::uint64_t index, complex phase);

  // Requires the state to be a basis vector; the amplitude becomes the
  // phase.
  static BasisState from_state(const StateVector& s, double tol = 1e-9);
  StateVector to_state() const;

  int n_qubits() const { return n_qubits_; }
  std::uint64_t index() const { return index_; }
  complex phase() const { return phase_; }

  // Accepts X, Z, CX, CZ, CCX, RESET; anything else cannot keep the state
  // in basis form and throws.
  void apply(const Gate& g, Rng* rng = nullptr);

 private:
  int n_qubits_;
  std::uint64_t index_;
  complex phase_;
};

}  // namespace qfed::qsim

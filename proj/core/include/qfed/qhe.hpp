// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qfed/che.hpp"
#include "qfed/qotp.hpp"
#include "qfed/qsim.hpp"
#include "qfed/rng.hpp"

// Homomorphic circuit evaluation over one-time-pad masked states.
//
// The server applies gates directly to the masked state. For the gates
// supported here the mask stays a Pauli mask; the key holder only has to
// track how its key bits transform:
//
//   X, Z      key unchanged
//   H         swap (z, x)
//   P         z ^= x
//   CX c->t   x_t ^= x_c,  z_c ^= z_t
//   CZ a,b    z_a ^= x_b,  z_b ^= x_a
//   RESET     wire forced to |0>, its key bits clear
//   CCX       see below
//
// CCX is the one non-Clifford gate carried through. Pushing the mask over
// it leaves a residue of two CX and one CZ that the server must apply
// conditioned on key bits it cannot see:
//
//   CX(c2->t) if x_c1,  CX(c1->t) if x_c2,  CZ(c1,c2) if z_t
//
// (mutually commuting), after which the key updates from the pre-gate
// snapshot: x_t ^= x_c1 & x_c2, z_c1 ^= z_t & x_c2, z_c2 ^= z_t & x_c1.
// The conditioned residue is what the sealed gadget below is for.
// T and the rotation gates are rejected: their residue is not expressible
// this way.
namespace qfed::qhe {

using qotp::PauliKey;

// True when the mask can be carried through the gate kind.
bool supported(qsim::GateKind k);

// Pure key-bit algebra for one gate (CCX from a pre-gate snapshot).
// Rejects unsupported kinds.
void update_key(PauliKey& key, const qsim::Gate& g);

// What the server is allowed to remember about a homomorphic run: the
// ordered gates, nothing else. No key material lives here, which is easy
// to audit since the struct owns only gate records.
struct KeyUpdateLog {
  int n_qubits = 0;
  std::vector<qsim::Gate> gates;

  void append(const qsim::Gate& g);
};

// Key-holder side: fold the log over the initial key.
PauliKey replay_key_updates(PauliKey initial, const KeyUpdateLog& log);

// Key-holder side record of one run: key before, the server's log, key
// after.
struct KeyTrace {
  PauliKey initial;
  KeyUpdateLog log;
  PauliKey final_key;
};

KeyTrace assemble_trace(const PauliKey& initial, const KeyUpdateLog& log);

// One line per gate, "GATE wires | z:<hex> x:<hex>" with the key as it
// stands after that gate; an "init" line carries the starting key.
std::string format_trace(const KeyTrace& trace);

// The server's ciphertext copy of the key holder's bits, updated through
// the evaluator with the same algebra as update_key. CCX costs exactly
// three evaluated ANDs and three XORs; H is a free ciphertext swap.
class EncryptedKeyRegister {
 public:
  EncryptedKeyRegister(std::vector<che::CheBit> z, std::vector<che::CheBit> x);

  // Key-holder helpers at the boundary of the protocol.
  static EncryptedKeyRegister from_key(const PauliKey& key,
                                       const che::CheSession& session,
                                       Rng& rng);
  PauliKey decrypt(const che::CheSession& session) const;

  int n_qubits() const { return int(z_.size()); }
  const che::CheBit& z(int i) const { return z_.at(i); }
  const che::CheBit& x(int i) const { return x_.at(i); }

  void update(const qsim::Gate& g, const che::CheEvaluator& eval);

  // Replace one wire's ciphertext bits, used when a freshly masked wire is
  // composed into the register (its mask bits arrive as ciphertext).
  void set_entry(int wire, const che::CheBit& z, const che::CheBit& x);

 private:
  std::vector<che::CheBit> z_;
  std::vector<che::CheBit> x_;
};

// Latency units charged per conditioned gate application. Constant no
// matter the condition's value, so timing reveals nothing about key bits.
inline constexpr std::int64_t kConditionedGateCost = 25;

class GadgetMeter {
 public:
  std::int64_t conditioned() const { return n_.load(); }
  std::int64_t units() const { return n_.load() * kConditionedGateCost; }
  void reset() { n_.store(0); }

 private:
  friend class GadgetOracle;
  std::atomic<std::int64_t> n_{0};
};

// Sealed helper that applies the CCX residue without disclosing key bits.
// Two builds share the seal:
//
//  * with_che: holds the decryption keypair; the server hands it gates
//    conditioned on ciphertext bits and the decision is made inside.
//  * with_frame: holds the current plaintext mask itself and both decides
//    and tracks gates internally; the server never supplies conditions.
//
// Either way the caller observes only the state transform and a constant
// charge per conditioned gate.
class GadgetOracle {
 public:
  static GadgetOracle with_che(const che::CheKeypair& keys,
                               std::shared_ptr<GadgetMeter> meter);
  static GadgetOracle with_frame(const PauliKey& initial,
                                 std::shared_ptr<GadgetMeter> meter);

  bool frame_mode() const { return frame_.has_value(); }

  // with_che only: applies g when cond decrypts to 1. Always charges one
  // conditioned gate.
  void apply_conditioned(qsim::StateVector& state, const qsim::Gate& g,
                         const che::CheBit& cond);
  void apply_conditioned(qsim::BasisState& state, const qsim::Gate& g,
                         const che::CheBit& cond);

  // with_frame only: carry the frame through a non-CCX gate.
  void track_gate(const qsim::Gate& g);

  // with_frame only: overwrite the frame bits of wires [first, first + k)
  // when freshly masked wires are composed in. The bits reach the seal
  // without passing through the server.
  void load_frame(int first_wire, const PauliKey& bits);

  // with_frame only: apply the residue for CCX(c1, c2, t) just applied to
  // the state, then advance the frame. Charges three conditioned gates.
  void apply_ccx_corrections(qsim::StateVector& state, int c1, int c2, int t);
  void apply_ccx_corrections(qsim::BasisState& state, int c1, int c2, int t);

 private:
  GadgetOracle() = default;
  template <typename State>
  void conditioned_impl(State& state, const qsim::Gate& g,
                        const che::CheBit& cond);
  template <typename State>
  void ccx_corrections_impl(State& state, int c1, int c2, int t);

  std::optional<che::CheKeypair> che_keys_;
  std::optional<PauliKey> frame_;
  std::shared_ptr<GadgetMeter> meter_;
};

// Homomorphic execution, baseline protocol: the encrypted key register
// advances via CHE and CCX residues go through the sealed gadget with
// ciphertext conditions. Gates are appended to the log. The BasisState
// overload is the constant-work-per-gate path for permutation circuits;
// the two paths draw from the rng identically.
void homomorphic_run_che(qsim::StateVector& cipher, const qsim::Circuit& c,
                         EncryptedKeyRegister& keys,
                         const che::CheEvaluator& eval, GadgetOracle& gadget,
                         KeyUpdateLog& log, Rng* rng = nullptr);
void homomorphic_run_che(qsim::BasisState& cipher, const qsim::Circuit& c,
                         EncryptedKeyRegister& keys,
                         const che::CheEvaluator& eval, GadgetOracle& gadget,
                         KeyUpdateLog& log, Rng* rng = nullptr);

// Homomorphic execution, frame protocol: the gadget tracks the mask
// itself; no ciphertext key register and no evaluator involved.
void homomorphic_run_frame(qsim::StateVector& cipher, const qsim::Circuit& c,
                           GadgetOracle& gadget, KeyUpdateLog& log,
                           Rng* rng = nullptr);
void homomorphic_run_frame(qsim::BasisState& cipher, const qsim::Circuit& c,
                           GadgetOracle& gadget, KeyUpdateLog& log,
                           Rng* rng = nullptr);

}  // namespace qfed::qhe

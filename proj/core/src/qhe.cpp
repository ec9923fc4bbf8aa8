// SPDX-License-Identifier: Apache-2.0
#include "qfed/qhe.hpp"

#include <utility>

#include "qfed/error.hpp"

namespace qfed::qhe {

using qsim::Gate;
using qsim::GateKind;

bool supported(GateKind k) {
  switch (k) {
    case GateKind::X:
    case GateKind::Z:
    case GateKind::H:
    case GateKind::P:
    case GateKind::CX:
    case GateKind::CZ:
    case GateKind::CCX:
    case GateKind::Reset:
      return true;
    default:
      return false;
  }
}

namespace {

void check_gate(const Gate& g, int n_qubits) {
  if (!supported(g.kind)) {
    throw Error(std::string(qsim::gate_name(g.kind)) +
                " cannot be carried through the mask");
  }
  for (int i = 0; i < g.arity(); ++i) {
    if (g.q[i] < 0 || g.q[i] >= n_qubits) {
      throw Error(std::string(qsim::gate_name(g.kind)) + " wire " +
                  std::to_string(g.q[i]) + " outside register of " +
                  std::to_string(n_qubits));
    }
    for (int j = 0; j < i; ++j) {
      if (g.q[i] == g.q[j]) {
        throw Error(std::string(qsim::gate_name(g.kind)) + " uses wire " +
                    std::to_string(g.q[i]) + " twice");
      }
    }
  }
}

std::string wires_of(const Gate& g) {
  std::string s;
  for (int i = 0; i < g.arity(); ++i) {
    if (i) s += ',';
    s += std::to_string(g.q[i]);
  }
  return s;
}

}  // namespace

void update_key(PauliKey& key, const Gate& g) {
  check_gate(g, key.n_qubits());
  switch (g.kind) {
    case GateKind::X:
    case GateKind::Z:
      break;
    case GateKind::H:
      std::swap(key.z[g.q[0]], key.x[g.q[0]]);
      break;
    case GateKind::P:
      key.z[g.q[0]] ^= key.x[g.q[0]];
      break;
    case GateKind::CX:
      key.x[g.q[1]] ^= key.x[g.q[0]];
      key.z[g.q[0]] ^= key.z[g.q[1]];
      break;
    case GateKind::CZ:
      key.z[g.q[0]] ^= key.x[g.q[1]];
      key.z[g.q[1]] ^= key.x[g.q[0]];
      break;
    case GateKind::CCX: {
      const int c1 = g.q[0], c2 = g.q[1], t = g.q[2];
      const std::uint8_t xc1 = key.x[c1], xc2 = key.x[c2], zt = key.z[t];
      key.x[t] ^= xc1 & xc2;
      key.z[c1] ^= zt & xc2;
      key.z[c2] ^= zt & xc1;
      break;
    }
    case GateKind::Reset:
      key.z[g.q[0]] = 0;
      key.x[g.q[0]] = 0;
      break;
    default:
      break;  // unreachable, check_gate already rejected
  }
}

void KeyUpdateLog::append(const Gate& g) {
  check_gate(g, n_qubits);
  gates.push_back(g);
}

PauliKey replay_key_updates(PauliKey initial, const KeyUpdateLog& log) {
  if (initial.n_qubits() != log.n_qubits) {
    throw Error("replay of a log on " + std::to_string(log.n_qubits) +
                " qubits with a key on " +
                std::to_string(initial.n_qubits()));
  }
  for (const Gate& g : log.gates) update_key(initial, g);
  return initial;
}

KeyTrace assemble_trace(const PauliKey& initial, const KeyUpdateLog& log) {
  KeyTrace t;
  t.initial = initial;
  t.log = log;
  t.final_key = replay_key_updates(initial, log);
  return t;
}

std::string format_trace(const KeyTrace& trace) {
  std::string out = "init | " + qotp::format_key(trace.initial) + "\n";
  PauliKey key = trace.initial;
  for (const Gate& g : trace.log.gates) {
    update_key(key, g);
    out += std::string(qsim::gate_name(g.kind)) + " " + wires_of(g) + " | " +
           qotp::format_key(key) + "\n";
  }
  return out;
}

EncryptedKeyRegister::EncryptedKeyRegister(std::vector<che::CheBit> z,
                                           std::vector<che::CheBit> x)
    : z_(std::move(z)), x_(std::move(x)) {
  if (z_.empty() || z_.size() != x_.size()) {
    throw Error("encrypted key register halves must match and be non-empty");
  }
}

EncryptedKeyRegister EncryptedKeyRegister::from_key(
    const PauliKey& key, const che::CheSession& session, Rng& rng) {
  std::vector<che::CheBit> z, x;
  z.reserve(key.n_qubits());
  x.reserve(key.n_qubits());
  for (int i = 0; i < key.n_qubits(); ++i) {
    z.push_back(session.encrypt(key.z[i], rng));
    x.push_back(session.encrypt(key.x[i], rng));
  }
  return EncryptedKeyRegister(std::move(z), std::move(x));
}

PauliKey EncryptedKeyRegister::decrypt(const che::CheSession& session) const {
  PauliKey key = PauliKey::zero(n_qubits());
  for (int i = 0; i < n_qubits(); ++i) {
    key.z[i] = std::uint8_t(session.decrypt(z_[i]));
    key.x[i] = std::uint8_t(session.decrypt(x_[i]));
  }
  return key;
}

void EncryptedKeyRegister::set_entry(int wire, const che::CheBit& z,
                                     const che::CheBit& x) {
  if (wire < 0 || wire >= n_qubits()) {
    throw Error("key register wire " + std::to_string(wire) +
                " outside register of " + std::to_string(n_qubits()));
  }
  z_[wire] = z;
  x_[wire] = x;
}

void EncryptedKeyRegister::update(const Gate& g,
                                  const che::CheEvaluator& eval) {
  check_gate(g, n_qubits());
  switch (g.kind) {
    case GateKind::X:
    case GateKind::Z:
      break;
    case GateKind::H:
      std::swap(z_[g.q[0]], x_[g.q[0]]);
      break;
    case GateKind::P:
      z_[g.q[0]] = eval.eval_xor(z_[g.q[0]], x_[g.q[0]]);
      break;
    case GateKind::CX:
      x_[g.q[1]] = eval.eval_xor(x_[g.q[1]], x_[g.q[0]]);
      z_[g.q[0]] = eval.eval_xor(z_[g.q[0]], z_[g.q[1]]);
      break;
    case GateKind::CZ:
      z_[g.q[0]] = eval.eval_xor(z_[g.q[0]], x_[g.q[1]]);
      z_[g.q[1]] = eval.eval_xor(z_[g.q[1]], x_[g.q[0]]);
      break;
    case GateKind::CCX: {
      const int c1 = g.q[0], c2 = g.q[1], t = g.q[2];
      const che::CheBit xc1 = x_[c1], xc2 = x_[c2], zt = z_[t];
      x_[t] = eval.eval_xor(x_[t], eval.eval_and(xc1, xc2));
      z_[c1] = eval.eval_xor(z_[c1], eval.eval_and(zt, xc2));
      z_[c2] = eval.eval_xor(z_[c2], eval.eval_and(zt, xc1));
      break;
    }
    case GateKind::Reset:
      z_[g.q[0]] = eval.encrypt_known(0);
      x_[g.q[0]] = eval.encrypt_known(0);
      break;
    default:
      break;  // unreachable, check_gate already rejected
  }
}

GadgetOracle GadgetOracle::with_che(const che::CheKeypair& keys,
                                    std::shared_ptr<GadgetMeter> meter) {
  if (keys.key_id == 0) throw Error("gadget needs a generated keypair");
  if (!meter) throw Error("gadget needs a meter");
  GadgetOracle g;
  g.che_keys_ = keys;
  g.meter_ = std::move(meter);
  return g;
}

GadgetOracle GadgetOracle::with_frame(const PauliKey& initial,
                                      std::shared_ptr<GadgetMeter> meter) {
  if (!meter) throw Error("gadget needs a meter");
  GadgetOracle g;
  g.frame_ = initial;
  g.meter_ = std::move(meter);
  return g;
}

namespace {

void state_apply(qsim::StateVector& s, const Gate& g, Rng* rng = nullptr) {
  qsim::apply_gate(s, g, rng);
}

void state_apply(qsim::BasisState& s, const Gate& g, Rng* rng = nullptr) {
  s.apply(g, rng);
}

}  // namespace

template <typename State>
void GadgetOracle::conditioned_impl(State& state, const Gate& g,
                                    const che::CheBit& cond) {
  if (!che_keys_) {
    throw Error("conditioned application needs the ciphertext-keyed gadget");
  }
  check_gate(g, state.n_qubits());
  if (g.kind == GateKind::Reset || g.kind == GateKind::CCX) {
    throw Error(std::string(qsim::gate_name(g.kind)) +
                " is not a valid conditioned correction");
  }
  // Constant charge before the branch; timing is independent of the bit.
  meter_->n_.fetch_add(1);
  if (che::decrypt_raw(*che_keys_, cond) == 1) {
    state_apply(state, g);
  }
}

void GadgetOracle::apply_conditioned(qsim::StateVector& state, const Gate& g,
                                     const che::CheBit& cond) {
  conditioned_impl(state, g, cond);
}

void GadgetOracle::apply_conditioned(qsim::BasisState& state, const Gate& g,
                                     const che::CheBit& cond) {
  conditioned_impl(state, g, cond);
}

void GadgetOracle::track_gate(const Gate& g) {
  if (!frame_) {
    throw Error("gate tracking needs the frame-keyed gadget");
  }
  if (g.kind == GateKind::CCX) {
    throw Error("CCX must go through apply_ccx_corrections");
  }
  update_key(*frame_, g);
}

void GadgetOracle::load_frame(int first_wire, const PauliKey& bits) {
  if (!frame_) {
    throw Error("frame loading needs the frame-keyed gadget");
  }
  if (first_wire < 0 ||
      first_wire + bits.n_qubits() > frame_->n_qubits()) {
    throw Error("frame load range [" + std::to_string(first_wire) + ", " +
                std::to_string(first_wire + bits.n_qubits()) +
                ") outside register of " +
                std::to_string(frame_->n_qubits()));
  }
  for (int i = 0; i < bits.n_qubits(); ++i) {
    frame_->z[first_wire + i] = bits.z[i];
    frame_->x[first_wire + i] = bits.x[i];
  }
}

template <typename State>
void GadgetOracle::ccx_corrections_impl(State& state, int c1, int c2, int t) {
  if (!frame_) {
    throw Error("residue application needs the frame-keyed gadget");
  }
  const Gate ccx = Gate::ccx(c1, c2, t);
  check_gate(ccx, frame_->n_qubits());
  const std::uint8_t xc1 = frame_->x[c1];
  const std::uint8_t xc2 = frame_->x[c2];
  const std::uint8_t zt = frame_->z[t];
  meter_->n_.fetch_add(3);
  if (xc1) state_apply(state, Gate::cx(c2, t));
  if (xc2) state_apply(state, Gate::cx(c1, t));
  if (zt) state_apply(state, Gate::cz(c1, c2));
  update_key(*frame_, ccx);
}

void GadgetOracle::apply_ccx_corrections(qsim::StateVector& state, int c1,
                                         int c2, int t) {
  ccx_corrections_impl(state, c1, c2, t);
}

void GadgetOracle::apply_ccx_corrections(qsim::BasisState& state, int c1,
                                         int c2, int t) {
  ccx_corrections_impl(state, c1, c2, t);
}

namespace {

template <typename State>
void run_che_impl(State& cipher, const qsim::Circuit& c,
                  EncryptedKeyRegister& keys, const che::CheEvaluator& eval,
                  GadgetOracle& gadget, KeyUpdateLog& log, Rng* rng) {
  if (c.n_qubits != cipher.n_qubits() || c.n_qubits != keys.n_qubits() ||
      c.n_qubits != log.n_qubits) {
    throw Error("homomorphic run with mismatched register sizes");
  }
  for (const Gate& g : c.gates) {
    check_gate(g, c.n_qubits);
    state_apply(cipher, g, rng);
    if (g.kind == GateKind::CCX) {
      const int c1 = g.q[0], c2 = g.q[1], t = g.q[2];
      // Residue conditions come from the key as it stood before the gate.
      const che::CheBit xc1 = keys.x(c1);
      const che::CheBit xc2 = keys.x(c2);
      const che::CheBit zt = keys.z(t);
      gadget.apply_conditioned(cipher, Gate::cx(c2, t), xc1);
      gadget.apply_conditioned(cipher, Gate::cx(c1, t), xc2);
      gadget.apply_conditioned(cipher, Gate::cz(c1, c2), zt);
    }
    keys.update(g, eval);
    log.append(g);
  }
}

template <typename State>
void run_frame_impl(State& cipher, const qsim::Circuit& c,
                    GadgetOracle& gadget, KeyUpdateLog& log, Rng* rng) {
  if (c.n_qubits != cipher.n_qubits() || c.n_qubits != log.n_qubits) {
    throw Error("homomorphic run with mismatched register sizes");
  }
  for (const Gate& g : c.gates) {
    check_gate(g, c.n_qubits);
    state_apply(cipher, g, rng);
    if (g.kind == GateKind::CCX) {
      gadget.apply_ccx_corrections(cipher, g.q[0], g.q[1], g.q[2]);
    } else {
      gadget.track_gate(g);
    }
    log.append(g);
  }
}

}  // namespace

void homomorphic_run_che(qsim::StateVector& cipher, const qsim::Circuit& c,
                         EncryptedKeyRegister& keys,
                         const che::CheEvaluator& eval, GadgetOracle& gadget,
                         KeyUpdateLog& log, Rng* rng) {
  run_che_impl(cipher, c, keys, eval, gadget, log, rng);
}

void homomorphic_run_che(qsim::BasisState& cipher, const qsim::Circuit& c,
                         EncryptedKeyRegister& keys,
                         const che::CheEvaluator& eval, GadgetOracle& gadget,
                         KeyUpdateLog& log, Rng* rng) {
  run_che_impl(cipher, c, keys, eval, gadget, log, rng);
}

void homomorphic_run_frame(qsim::StateVector& cipher, const qsim::Circuit& c,
                           GadgetOracle& gadget, KeyUpdateLog& log,
                           Rng* rng) {
  run_frame_impl(cipher, c, gadget, log, rng);
}

void homomorphic_run_frame(qsim::BasisState& cipher, const qsim::Circuit& c,
                           GadgetOracle& gadget, KeyUpdateLog& log,
                           Rng* rng) {
  run_frame_impl(cipher, c, gadget, log, rng);
}

}  // namespace qfed::qhe

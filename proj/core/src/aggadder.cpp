// SPDX-License-Identifier: Apache-2.0
#include "qfed/aggadder.hpp"

#include <algorithm>

#include "qfed/error.hpp"

namespace qfed::aggadder {

using qsim::Circuit;
using qsim::Gate;
using qsim::GateKind;

AdderLayout::AdderLayout(int w) : width(w) {
  if (w < 1) {
    throw Error("adder width must be positive, got " + std::to_string(w));
  }
  if (2 * w + 1 > qsim::kMaxQubits) {
    throw Error("adder width " + std::to_string(w) + " needs " +
                std::to_string(2 * w + 1) + " qubits, over the limit of " +
                std::to_string(qsim::kMaxQubits));
  }
}

Circuit build_adder(int width) {
  const AdderLayout lay(width);
  const int W = width;
  Circuit c(lay.total_qubits());

  // kappa(i): the wire carrying the i-th carry-in during the ripple. The
  // register's carry wire feeds stage 0; afterwards the carry rides the
  // previous operand wire.
  const auto kappa = [&](int i) {
    return i == 0 ? lay.carry_wire() : lay.operand_wire(i - 1);
  };

  // Forward sweep: operand wire i ends up holding carry(i+1); its own
  // value moves into the parity on the accumulator wire.
  for (int i = 0; i + 1 < W; ++i) {
    c.append(Gate::cx(lay.operand_wire(i), lay.acc_wire(i)));
    c.append(Gate::cx(lay.operand_wire(i), kappa(i)));
    c.append(Gate::ccx(kappa(i), lay.acc_wire(i), lay.operand_wire(i)));
  }

  // Top bit needs no carry-out, just the sum parity.
  c.append(Gate::cx(lay.operand_wire(W - 1), lay.acc_wire(W - 1)));
  c.append(Gate::cx(kappa(W - 1), lay.acc_wire(W - 1)));

  // Reverse sweep: undo the carries, restoring operand and carry wires,
  // and finish each sum bit.
  for (int i = W - 2; i >= 0; --i) {
    c.append(Gate::ccx(kappa(i), lay.acc_wire(i), lay.operand_wire(i)));
    c.append(Gate::cx(lay.operand_wire(i), kappa(i)));
    c.append(Gate::cx(kappa(i), lay.acc_wire(i)));
  }
  return c;
}

double GateCostModel::of(GateKind k) const {
  switch (k) {
    case GateKind::CX:
    case GateKind::CZ:
      return cx;
    case GateKind::CCX:
      return ccx;
    case GateKind::Reset:
      return reset;
    default:
      return one_qubit;
  }
}

GateCounts count_gates(const Circuit& c) {
  GateCounts n;
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::X: ++n.x; break;
      case GateKind::CX: ++n.cx; break;
      case GateKind::CZ: ++n.cz; break;
      case GateKind::CCX: ++n.ccx; break;
      case GateKind::Reset: ++n.reset; break;
      default: ++n.other; break;
    }
  }
  return n;
}

double circuit_cost(const Circuit& c, const GateCostModel& m) {
  double total = 0.0;
  for (const Gate& g : c.gates) total += m.of(g.kind);
  return total;
}

double circuit_latency(const Circuit& c, const GateCostModel& m) {
  std::vector<double> busy_until(c.n_qubits, 0.0);
  double makespan = 0.0;
  for (const Gate& g : c.gates) {
    double start = 0.0;
    for (int i = 0; i < g.arity(); ++i) {
      start = std::max(start, busy_until[g.q[i]]);
    }
    const double finish = start + m.of(g.kind);
    for (int i = 0; i < g.arity(); ++i) {
      busy_until[g.q[i]] = finish;
    }
    makespan = std::max(makespan, finish);
  }
  return makespan;
}

std::vector<ComparisonRow> comparison_rows(int width,
                                           const GateCostModel& m) {
  std::vector<ComparisonRow> rows;

  ComparisonRow a;
  a.scheme = "reference-a";
  a.qotp_compatible = false;
  a.qubits = 11;
  a.cx = 15;
  a.ccx = 7;
  a.cost = 65.0;
  a.latency = 55.0;
  a.note =
      "catalog figures as reported; the reported cost 65 disagrees with "
      "its own gate counts under this cost model (15*1 + 7*5 = 50)";
  rows.push_back(a);

  ComparisonRow b;
  b.scheme = "reference-b";
  b.qotp_compatible = false;
  b.qubits = 16;
  b.cx = 25;
  b.ccx = 5;
  b.cost = 50.0;
  b.latency = 50.0;
  b.note = "catalog figures as reported";
  rows.push_back(b);

  const Circuit adder = build_adder(width);
  const GateCounts n = count_gates(adder);
  ComparisonRow ours;
  ours.scheme = "this-design";
  ours.qotp_compatible = true;
  ours.qubits = adder.n_qubits;
  ours.cx = n.cx;
  ours.ccx = n.ccx;
  ours.cost = circuit_cost(adder, m);
  ours.latency = circuit_latency(adder, m);
  ours.note =
      "measured from the built circuit; the register is 2W+1 wires (7 at "
      "width 3) while the catalog entry for this construction lists 11, a "
      "discrepancy reported rather than reproduced";
  rows.push_back(ours);
  return rows;
}

std::string format_comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "scheme,qubits,cx,ccx,cost,latency\n";
  char buf[160];
  for (const ComparisonRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%g,%g\n", r.scheme.c_str(),
                  r.qubits, r.cx, r.ccx, r.cost, r.latency);
    out += buf;
  }
  return out;
}

MaskedValue mask_value(int width, std::uint32_t value,
                       const qotp::PauliKey& key) {
  const AdderLayout lay(width);
  if (key.n_qubits() != width) {
    throw Error("mask key on " + std::to_string(key.n_qubits()) +
                " wires for a width-" + std::to_string(width) + " value");
  }
  if (width < 32 && (value >> width) != 0) {
    throw Error("value " + std::to_string(value) + " does not fit in " +
                std::to_string(width) + " bits");
  }
  std::uint64_t masked = value;
  int z_dot_m = 0;
  for (int i = 0; i < width; ++i) {
    if (key.x[i]) masked ^= std::uint64_t(1) << i;
  }
  for (int i = 0; i < width; ++i) {
    if (key.z[i] && ((masked >> i) & 1)) z_dot_m ^= 1;
  }
  const qsim::complex phase(z_dot_m ? -1.0 : 1.0, 0.0);
  return MaskedValue{qsim::BasisState(width, masked, phase), key};
}

MaskedValue mask_value_random(int width, std::uint32_t value, Rng& rng) {
  return mask_value(width, value, qotp::random_key(width, rng));
}

std::uint32_t unmask_value(const qsim::BasisState& cipher,
                           const qotp::PauliKey& key) {
  if (key.n_qubits() != cipher.n_qubits()) {
    throw Error("unmask key on " + std::to_string(key.n_qubits()) +
                " wires for a " + std::to_string(cipher.n_qubits()) +
                " wire ciphertext");
  }
  std::uint64_t value = cipher.index();
  for (int i = 0; i < key.n_qubits(); ++i) {
    if (key.x[i]) value ^= std::uint64_t(1) << i;
  }
  return std::uint32_t(value);
}

namespace {

Circuit teardown_circuit(const AdderLayout& lay) {
  Circuit c(lay.total_qubits());
  for (int i = 0; i < lay.width; ++i) {
    c.append(Gate::reset(lay.operand_wire(i)));
  }
  c.append(Gate::reset(lay.carry_wire()));
  return c;
}

}  // namespace

EncryptedAccumulator::EncryptedAccumulator(int width)
    : layout_(width),
      adder_(build_adder(width)),
      teardown_(teardown_circuit(layout_)),
      state_(layout_.total_qubits(), 0, qsim::complex(1.0, 0.0)) {
  log_.n_qubits = layout_.total_qubits();
}

EncryptedAccumulator EncryptedAccumulator::with_che(
    int width, const che::CheKeypair& round_keys,
    std::shared_ptr<che::CheMeter> server_meter,
    std::shared_ptr<qhe::GadgetMeter> gadget_meter) {
  EncryptedAccumulator acc(width);
  acc.eval_.emplace(round_keys, std::move(server_meter));
  // A fresh register is known-unmasked, so the server itself produces the
  // all-zero key ciphertexts.
  std::vector<che::CheBit> z, x;
  for (int i = 0; i < acc.layout_.total_qubits(); ++i) {
    z.push_back(acc.eval_->encrypt_known(0));
    x.push_back(acc.eval_->encrypt_known(0));
  }
  acc.reg_.emplace(std::move(z), std::move(x));
  acc.gadget_ = qhe::GadgetOracle::with_che(round_keys,
                                            std::move(gadget_meter));
  return acc;
}

EncryptedAccumulator EncryptedAccumulator::with_frame(
    int width, std::shared_ptr<qhe::GadgetMeter> gadget_meter) {
  EncryptedAccumulator acc(width);
  acc.gadget_ = qhe::GadgetOracle::with_frame(
      qotp::PauliKey::zero(acc.layout_.total_qubits()),
      std::move(gadget_meter));
  return acc;
}

void EncryptedAccumulator::compose_operand(const qsim::BasisState& operand) {
  if (operand.n_qubits() != layout_.width) {
    throw Error("operand on " + std::to_string(operand.n_qubits()) +
                " wires, accumulator width is " +
                std::to_string(layout_.width));
  }
  const std::uint64_t op_mask =
      (std::uint64_t(1) << layout_.width) - 1;
  const std::uint64_t cin_mask = std::uint64_t(1) << layout_.carry_wire();
  if ((state_.index() & op_mask) != 0 || (state_.index() & cin_mask) != 0) {
    throw Error("operand and carry wires not clear before composing");
  }
  state_ = qsim::BasisState(layout_.total_qubits(),
                            state_.index() | operand.index(),
                            state_.phase() * operand.phase());
}

void EncryptedAccumulator::run_homomorphic(const Circuit& c, Rng& rng) {
  if (reg_) {
    qhe::homomorphic_run_che(state_, c, *reg_, *eval_, *gadget_, log_, &rng);
  } else {
    qhe::homomorphic_run_frame(state_, c, *gadget_, log_, &rng);
  }
}

void EncryptedAccumulator::add_operand(const qsim::BasisState& operand,
                                       const std::vector<che::CheBit>& key_z,
                                       const std::vector<che::CheBit>& key_x,
                                       Rng& rng) {
  if (!reg_) {
    throw Error("ciphertext mask bits need the ciphertext-keyed "
                "accumulator");
  }
  if (int(key_z.size()) != layout_.width ||
      int(key_x.size()) != layout_.width) {
    throw Error("operand mask ciphertext must cover exactly the operand "
                "wires");
  }
  compose_operand(operand);
  for (int i = 0; i < layout_.width; ++i) {
    reg_->set_entry(layout_.operand_wire(i), key_z[i], key_x[i]);
  }
  run_homomorphic(adder_, rng);
  run_homomorphic(teardown_, rng);
  ++operands_;
}

void EncryptedAccumulator::add_operand(const qsim::BasisState& operand,
                                       const qotp::PauliKey& operand_key,
                                       Rng& rng) {
  if (reg_) {
    throw Error("plain mask bits need the frame-keyed accumulator");
  }
  if (operand_key.n_qubits() != layout_.width) {
    throw Error("operand mask must cover exactly the operand wires");
  }
  compose_operand(operand);
  gadget_->load_frame(0, operand_key);
  run_homomorphic(adder_, rng);
  run_homomorphic(teardown_, rng);
  ++operands_;
}

qsim::BasisState EncryptedAccumulator::acc_cipher() const {
  const std::uint64_t op_mask = (std::uint64_t(1) << layout_.width) - 1;
  const std::uint64_t cin_mask = std::uint64_t(1) << layout_.carry_wire();
  if ((state_.index() & op_mask) != 0 || (state_.index() & cin_mask) != 0) {
    throw Error("operand wires not torn down, accumulator not sliceable");
  }
  return qsim::BasisState(layout_.width,
                          (state_.index() >> layout_.width) & op_mask,
                          state_.phase());
}

std::vector<che::CheBit> EncryptedAccumulator::acc_key_z() const {
  if (!reg_) {
    throw Error("no ciphertext key register in the frame-keyed "
                "accumulator");
  }
  std::vector<che::CheBit> out;
  for (int i = 0; i < layout_.width; ++i) {
    out.push_back(reg_->z(layout_.acc_wire(i)));
  }
  return out;
}

std::vector<che::CheBit> EncryptedAccumulator::acc_key_x() const {
  if (!reg_) {
    throw Error("no ciphertext key register in the frame-keyed "
                "accumulator");
  }
  std::vector<che::CheBit> out;
  for (int i = 0; i < layout_.width; ++i) {
    out.push_back(reg_->x(layout_.acc_wire(i)));
  }
  return out;
}

qotp::PauliKey EncryptedAccumulator::replay_aggregation_key(
    int width, const std::vector<qotp::PauliKey>& operand_keys) {
  const AdderLayout lay(width);
  const Circuit adder = build_adder(width);
  const Circuit teardown = teardown_circuit(lay);
  qotp::PauliKey key = qotp::PauliKey::zero(lay.total_qubits());
  for (const qotp::PauliKey& op : operand_keys) {
    if (op.n_qubits() != width) {
      throw Error("operand mask must cover exactly the operand wires");
    }
    for (int i = 0; i < width; ++i) {
      key.z[lay.operand_wire(i)] = op.z[i];
      key.x[lay.operand_wire(i)] = op.x[i];
    }
    for (const Gate& g : adder.gates) qhe::update_key(key, g);
    for (const Gate& g : teardown.gates) qhe::update_key(key, g);
  }
  return key;
}

qotp::PauliKey EncryptedAccumulator::slice_acc_key(
    const qotp::PauliKey& combined, int width) {
  const AdderLayout lay(width);
  if (combined.n_qubits() != lay.total_qubits()) {
    throw Error("combined mask has " + std::to_string(combined.n_qubits()) +
                " wires, layout needs " +
                std::to_string(lay.total_qubits()));
  }
  qotp::PauliKey out = qotp::PauliKey::zero(width);
  for (int i = 0; i < width; ++i) {
    out.z[i] = combined.z[lay.acc_wire(i)];
    out.x[i] = combined.x[lay.acc_wire(i)];
  }
  return out;
}

}  // namespace qfed::aggadder

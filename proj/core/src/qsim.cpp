// SPDX-License-Identifier: Apache-2.0
#include "qfed/qsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qfed::qsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string wire_list(const Gate& g) {
  std::string s;
  for (int i = 0; i < g.arity(); ++i) {
    if (i) s += ',';
    s += std::to_string(g.q[i]);
  }
  return s;
}

}  // namespace

bool gate_takes_angle(GateKind k) {
  return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

int gate_arity(GateKind k) {
  switch (k) {
    case GateKind::CX:
    case GateKind::CZ:
      return 2;
    case GateKind::CCX:
      return 3;
    default:
      return 1;
  }
}

const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::X: return "X";
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::P: return "P";
    case GateKind::T: return "T";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CX: return "CX";
    case GateKind::CZ: return "CZ";
    case GateKind::CCX: return "CCX";
    case GateKind::Reset: return "RESET";
  }
  return "?";
}

Gate Gate::x(int t) { return Gate{GateKind::X, {t, -1, -1}, 0.0}; }
Gate Gate::z(int t) { return Gate{GateKind::Z, {t, -1, -1}, 0.0}; }
Gate Gate::h(int t) { return Gate{GateKind::H, {t, -1, -1}, 0.0}; }
Gate Gate::p(int t) { return Gate{GateKind::P, {t, -1, -1}, 0.0}; }
Gate Gate::t(int tq) { return Gate{GateKind::T, {tq, -1, -1}, 0.0}; }
Gate Gate::rx(int t, double a) { return Gate{GateKind::RX, {t, -1, -1}, a}; }
Gate Gate::ry(int t, double a) { return Gate{GateKind::RY, {t, -1, -1}, a}; }
Gate Gate::rz(int t, double a) { return Gate{GateKind::RZ, {t, -1, -1}, a}; }
Gate Gate::cx(int c, int t) { return Gate{GateKind::CX, {c, t, -1}, 0.0}; }
Gate Gate::cz(int a, int b) { return Gate{GateKind::CZ, {a, b, -1}, 0.0}; }
Gate Gate::ccx(int c1, int c2, int t) {
  return Gate{GateKind::CCX, {c1, c2, t}, 0.0};
}
Gate Gate::reset(int t) { return Gate{GateKind::Reset, {t, -1, -1}, 0.0}; }

bool operator==(const Gate& a, const Gate& b) {
  if (a.kind != b.kind) return false;
  for (int i = 0; i < a.arity(); ++i) {
    if (a.q[i] != b.q[i]) return false;
  }
  if (gate_takes_angle(a.kind) && a.angle != b.angle) return false;
  return true;
}

Circuit::Circuit(int n) : n_qubits(n) {
  if (n < 1 || n > kMaxQubits) {
    throw Error("circuit qubit count " + std::to_string(n) +
                " outside [1, " + std::to_string(kMaxQubits) + "]");
  }
}

Circuit& Circuit::append(const Gate& g) {
  const int ar = g.arity();
  for (int i = 0; i < ar; ++i) {
    if (g.q[i] < 0 || g.q[i] >= n_qubits) {
      throw Error(std::string(gate_name(g.kind)) + " wire " +
                  std::to_string(g.q[i]) + " outside register of " +
                  std::to_string(n_qubits));
    }
    for (int j = 0; j < i; ++j) {
      if (g.q[i] == g.q[j]) {
        throw Error(std::string(gate_name(g.kind)) +
                    " uses wire " + std::to_string(g.q[i]) + " twice");
      }
    }
  }
  if (gate_takes_angle(g.kind) && !std::isfinite(g.angle)) {
    throw Error(std::string(gate_name(g.kind)) + " angle is not finite");
  }
  gates.push_back(g);
  return *this;
}

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw Error("state qubit count " + std::to_string(n_qubits) +
                " outside [1, " + std::to_string(kMaxQubits) + "]");
  }
  amps_.assign(std::uint64_t(1) << n_qubits, complex(0.0, 0.0));
  amps_[0] = complex(1.0, 0.0);
}

StateVector StateVector::basis(int n_qubits, std::uint64_t index) {
  StateVector s(n_qubits);
  if (index >= s.dim()) {
    throw Error("basis index " + std::to_string(index) +
                " outside register of " + std::to_string(n_qubits));
  }
  s.amps_[0] = complex(0.0, 0.0);
  s.amps_[index] = complex(1.0, 0.0);
  return s;
}

StateVector StateVector::from_amplitudes(int n_qubits,
                                         std::vector<complex> amps) {
  StateVector s(n_qubits);
  if (amps.size() != s.dim()) {
    throw Error("amplitude count " + std::to_string(amps.size()) +
                " does not match 2^" + std::to_string(n_qubits));
  }
  s.amps_ = std::move(amps);
  return s;
}

double StateVector::norm() const {
  double n2 = 0.0;
  for (const complex& a : amps_) n2 += std::norm(a);
  return std::sqrt(n2);
}

std::optional<std::uint64_t> StateVector::basis_index(double tol) const {
  std::uint64_t best = 0;
  double best_mag = -1.0;
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    const double m = std::abs(amps_[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  if (std::abs(best_mag - 1.0) > tol) return std::nullopt;
  for (std::uint64_t i = 0; i < amps_.size(); ++i) {
    if (i != best && std::abs(amps_[i]) > tol) return std::nullopt;
  }
  return best;
}

namespace {

// amps <- (m00 m01; m10 m11) applied on `qubit`.
void apply_1q(std::vector<complex>& amps, int qubit, complex m00, complex m01,
              complex m10, complex m11) {
  const std::uint64_t bit = std::uint64_t(1) << qubit;
  const std::uint64_t n = amps.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i & bit) continue;
    const complex a0 = amps[i];
    const complex a1 = amps[i | bit];
    amps[i] = m00 * a0 + m01 * a1;
    amps[i | bit] = m10 * a0 + m11 * a1;
  }
}

void check_wires(const StateVector& s, const Gate& g) {
  for (int i = 0; i < g.arity(); ++i) {
    if (g.q[i] < 0 || g.q[i] >= s.n_qubits()) {
      throw Error(std::string(gate_name(g.kind)) + " " + wire_list(g) +
                  " outside register of " + std::to_string(s.n_qubits()));
    }
    for (int j = 0; j < i; ++j) {
      if (g.q[i] == g.q[j]) {
        throw Error(std::string(gate_name(g.kind)) + " uses wire " +
                    std::to_string(g.q[i]) + " twice");
      }
    }
  }
}

}  // namespace

void apply_gate(StateVector& state, const Gate& g, Rng* rng) {
  check_wires(state, g);
  std::vector<complex>& amps = state.amps_;
  const double half = g.angle / 2.0;
  switch (g.kind) {
    case GateKind::X: {
      const std::uint64_t bit = std::uint64_t(1) << g.q[0];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if (!(i & bit)) std::swap(amps[i], amps[i | bit]);
      }
      break;
    }
    case GateKind::Z: {
      const std::uint64_t bit = std::uint64_t(1) << g.q[0];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if (i & bit) amps[i] = -amps[i];
      }
      break;
    }
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      apply_1q(amps, g.q[0], complex(r, 0), complex(r, 0), complex(r, 0),
               complex(-r, 0));
      break;
    }
    case GateKind::P: {
      const std::uint64_t bit = std::uint64_t(1) << g.q[0];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if (i & bit) amps[i] *= complex(0.0, 1.0);
      }
      break;
    }
    case GateKind::T: {
      const complex w = std::polar(1.0, kPi / 4.0);
      const std::uint64_t bit = std::uint64_t(1) << g.q[0];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if (i & bit) amps[i] *= w;
      }
      break;
    }
    case GateKind::RX: {
      const complex c(std::cos(half), 0.0);
      const complex s(0.0, -std::sin(half));
      apply_1q(amps, g.q[0], c, s, s, c);
      break;
    }
    case GateKind::RY: {
      const double c = std::cos(half);
      const double s = std::sin(half);
      apply_1q(amps, g.q[0], complex(c, 0), complex(-s, 0), complex(s, 0),
               complex(c, 0));
      break;
    }
    case GateKind::RZ: {
      const complex e0 = std::polar(1.0, -half);
      const complex e1 = std::polar(1.0, half);
      const std::uint64_t bit = std::uint64_t(1) << g.q[0];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        amps[i] *= (i & bit) ? e1 : e0;
      }
      break;
    }
    case GateKind::CX: {
      const std::uint64_t cb = std::uint64_t(1) << g.q[0];
      const std::uint64_t tb = std::uint64_t(1) << g.q[1];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if ((i & cb) && !(i & tb)) std::swap(amps[i], amps[i | tb]);
      }
      break;
    }
    case GateKind::CZ: {
      const std::uint64_t ab = std::uint64_t(1) << g.q[0];
      const std::uint64_t bb = std::uint64_t(1) << g.q[1];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if ((i & ab) && (i & bb)) amps[i] = -amps[i];
      }
      break;
    }
    case GateKind::CCX: {
      const std::uint64_t c1 = std::uint64_t(1) << g.q[0];
      const std::uint64_t c2 = std::uint64_t(1) << g.q[1];
      const std::uint64_t tb = std::uint64_t(1) << g.q[2];
      for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if ((i & c1) && (i & c2) && !(i & tb)) {
          std::swap(amps[i], amps[i | tb]);
        }
      }
      break;
    }
    case GateKind::Reset: {
      if (rng == nullptr) {
        throw Error("RESET requires a random source");
      }
      reset_qubit(state, g.q[0], *rng);
      break;
    }
  }
}

void run_circuit(StateVector& state, const Circuit& c, Rng* rng) {
  if (c.n_qubits != state.n_qubits()) {
    throw Error("circuit on " + std::to_string(c.n_qubits) +
                " qubits applied to state on " +
                std::to_string(state.n_qubits()));
  }
  for (const Gate& g : c.gates) apply_gate(state, g, rng);
}

std::string measure_all(StateVector& state, Rng& rng) {
  const double n = state.norm();
  if (std::abs(n - 1.0) > 1e-6) {
    throw Error("measuring an unnormalized state (norm " +
                std::to_string(n) + ")");
  }
  std::vector<complex>& amps = state.amps_;
  const double u = rng.uniform();
  double acc = 0.0;
  std::uint64_t outcome = amps.size() - 1;  // fallback for rounding slack
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    acc += std::norm(amps[i]);
    if (u < acc) {
      outcome = i;
      break;
    }
  }
  std::fill(amps.begin(), amps.end(), complex(0.0, 0.0));
  amps[outcome] = complex(1.0, 0.0);
  std::string bits(state.n_qubits(), '0');
  for (int q = 0; q < state.n_qubits(); ++q) {
    if ((outcome >> q) & 1) bits[q] = '1';
  }
  return bits;
}

void reset_qubit(StateVector& state, int qubit, Rng& rng) {
  if (qubit < 0 || qubit >= state.n_qubits()) {
    throw Error("RESET wire " + std::to_string(qubit) +
                " outside register of " + std::to_string(state.n_qubits()));
  }
  std::vector<complex>& amps = state.amps_;
  const std::uint64_t bit = std::uint64_t(1) << qubit;
  double p0 = 0.0;
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    if (!(i & bit)) p0 += std::norm(amps[i]);
  }
  // One uniform draw per reset, regardless of the probabilities involved:
  // callers rely on RESET consuming exactly one value from the stream.
  const double u = rng.uniform();
  const bool outcome_one = !(u < p0);
  const double keep = outcome_one ? std::max(0.0, 1.0 - p0) : p0;
  if (keep <= 0.0) {
    throw Error("RESET collapse onto a zero-probability branch");
  }
  const double scale = 1.0 / std::sqrt(keep);
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    const bool one = (i & bit) != 0;
    if (one == outcome_one) {
      amps[i] *= scale;
    } else {
      amps[i] = complex(0.0, 0.0);
    }
  }
  if (outcome_one) {
    apply_gate(state, Gate::x(qubit), nullptr);
  }
}

double expectation_z(const StateVector& state, int qubit) {
  if (qubit < 0 || qubit >= state.n_qubits()) {
    throw Error("Z expectation wire " + std::to_string(qubit) +
                " outside register of " + std::to_string(state.n_qubits()));
  }
  const std::uint64_t bit = std::uint64_t(1) << qubit;
  double v = 0.0;
  for (std::uint64_t i = 0; i < state.amplitudes().size(); ++i) {
    const double p = std::norm(state.amplitudes()[i]);
    v += (i & bit) ? -p : p;
  }
  return v;
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) {
    throw Error("fidelity between registers of different sizes");
  }
  complex ip(0.0, 0.0);
  for (std::uint64_t i = 0; i < a.amplitudes().size(); ++i) {
    ip += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
  }
  return std::abs(ip);
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  const int n = a.n_qubits() + b.n_qubits();
  if (n > kMaxQubits) {
    throw Error("tensor product of " + std::to_string(n) +
                " qubits exceeds the " + std::to_string(kMaxQubits) +
                " qubit limit");
  }
  StateVector out(n);
  std::fill(out.amps_.begin(), out.amps_.end(), complex(0.0, 0.0));
  for (std::uint64_t ib = 0; ib < b.dim(); ++ib) {
    const complex vb = b.amplitudes()[ib];
    if (vb == complex(0.0, 0.0)) continue;
    for (std::uint64_t ia = 0; ia < a.dim(); ++ia) {
      out.amps_[ia + (ib << a.n_qubits())] = a.amplitudes()[ia] * vb;
    }
  }
  return out;
}

StateVector extract_qubits(const StateVector& s, int first, int count,
                           double tol) {
  if (first < 0 || count < 1 || first + count > s.n_qubits()) {
    throw Error("extract range [" + std::to_string(first) + ", " +
                std::to_string(first + count) + ") outside register of " +
                std::to_string(s.n_qubits()));
  }
  const std::uint64_t inner = (std::uint64_t(1) << count) - 1;
  StateVector out(count);
  std::fill(out.amps_.begin(), out.amps_.end(), complex(0.0, 0.0));
  double stray = 0.0;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    const std::uint64_t rest = i & ~(inner << first);
    if (rest != 0) {
      stray += std::norm(s.amplitudes()[i]);
      continue;
    }
    out.amps_[(i >> first) & inner] = s.amplitudes()[i];
  }
  if (stray > tol) {
    throw Error("extract found weight " + std::to_string(stray) +
                " outside the requested qubits");
  }
  return out;
}

BasisState::BasisState(int n_qubits, std::uint64_t index, complex phase)
    : n_qubits_(n_qubits), index_(index), phase_(phase) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw Error("basis tracker qubit count " + std::to_string(n_qubits) +
                " outside [1, " + std::to_string(kMaxQubits) + "]");
  }
  if (index >= (std::uint64_t(1) << n_qubits)) {
    throw Error("basis index " + std::to_string(index) +
                " outside register of " + std::to_string(n_qubits));
  }
  if (std::abs(std::abs(phase) - 1.0) > 1e-9) {
    throw Error("basis tracker phase must have unit magnitude");
  }
}

BasisState BasisState::from_state(const StateVector& s, double tol) {
  const auto idx = s.basis_index(tol);
  if (!idx) {
    throw Error("state is not a basis vector, cannot track it");
  }
  return BasisState(s.n_qubits(), *idx, s.amplitude(*idx));
}

StateVector BasisState::to_state() const {
  StateVector s = StateVector::basis(n_qubits_, index_);
  std::vector<complex> amps = s.amplitudes();
  amps[index_] = phase_;
  return StateVector::from_amplitudes(n_qubits_, std::move(amps));
}

void BasisState::apply(const Gate& g, Rng* rng) {
  for (int i = 0; i < g.arity(); ++i) {
    if (g.q[i] < 0 || g.q[i] >= n_qubits_) {
      throw Error(std::string(gate_name(g.kind)) + " wire " +
                  std::to_string(g.q[i]) + " outside register of " +
                  std::to_string(n_qubits_));
    }
    for (int j = 0; j < i; ++j) {
      if (g.q[i] == g.q[j]) {
        throw Error(std::string(gate_name(g.kind)) + " uses wire " +
                    std::to_string(g.q[i]) + " twice");
      }
    }
  }
  const auto bit = [](int q) { return std::uint64_t(1) << q; };
  switch (g.kind) {
    case GateKind::X:
      index_ ^= bit(g.q[0]);
      break;
    case GateKind::Z:
      if (index_ & bit(g.q[0])) phase_ = -phase_;
      break;
    case GateKind::CX:
      if (index_ & bit(g.q[0])) index_ ^= bit(g.q[1]);
      break;
    case GateKind::CZ:
      if ((index_ & bit(g.q[0])) && (index_ & bit(g.q[1]))) phase_ = -phase_;
      break;
    case GateKind::CCX:
      if ((index_ & bit(g.q[0])) && (index_ & bit(g.q[1]))) {
        index_ ^= bit(g.q[2]);
      }
      break;
    case GateKind::Reset: {
      if (rng == nullptr) {
        throw Error("RESET requires a random source");
      }
      // The dense path draws one uniform per reset; match it so shared
      // streams stay aligned. The outcome itself is determined.
      (void)rng->uniform();
      index_ &= ~bit(g.q[0]);
      break;
    }
    default:
      throw Error(std::string(gate_name(g.kind)) +
                  " does not keep a basis state in basis form");
  }
}

namespace {

std::optional<GateKind> kind_from_name(std::string name) {
  for (char& ch : name) ch = char(std::toupper(static_cast<unsigned char>(ch)));
  static const std::pair<const char*, GateKind> table[] = {
      {"X", GateKind::X},   {"Z", GateKind::Z},   {"H", GateKind::H},
      {"P", GateKind::P},   {"T", GateKind::T},   {"RX", GateKind::RX},
      {"RY", GateKind::RY}, {"RZ", GateKind::RZ}, {"CX", GateKind::CX},
      {"CZ", GateKind::CZ}, {"CCX", GateKind::CCX},
      {"RESET", GateKind::Reset},
  };
  for (const auto& [n, k] : table) {
    if (name == n) return k;
  }
  return std::nullopt;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Circuit parse_circuit(const std::string& text) {
  std::vector<Gate> gates;
  int declared_qubits = -1;
  int max_wire = -1;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      // The "# qubits N" header is the one comment that carries meaning.
      std::istringstream cs(line.substr(hash + 1));
      std::string word;
      int n = 0;
      if (cs >> word >> n && word == "qubits" && declared_qubits < 0 &&
          trim(line.substr(0, hash)).empty()) {
        declared_qubits = n;
      }
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    std::istringstream ls(line);
    std::string name, wires, extra;
    ls >> name >> wires;
    if (wires.empty()) {
      throw Error("line " + std::to_string(line_no) + ": gate \"" + name +
                  "\" has no wires");
    }
    const std::optional<GateKind> kind = kind_from_name(name);
    if (!kind) {
      throw Error("line " + std::to_string(line_no) + ": unknown gate \"" +
                  name + "\"");
    }
    Gate g;
    g.kind = *kind;
    int count = 0;
    std::istringstream ws(wires);
    std::string tok;
    while (std::getline(ws, tok, ',')) {
      if (count >= 3) {
        throw Error("line " + std::to_string(line_no) +
                    ": more than three wires");
      }
      try {
        std::size_t used = 0;
        const int w = std::stoi(tok, &used);
        if (used != tok.size() || w < 0) throw std::invalid_argument(tok);
        g.q[count++] = w;
        max_wire = std::max(max_wire, w);
      } catch (const std::exception&) {
        throw Error("line " + std::to_string(line_no) + ": bad wire \"" +
                    tok + "\"");
      }
    }
    if (count != gate_arity(*kind)) {
      throw Error("line " + std::to_string(line_no) + ": " +
                  gate_name(*kind) + " takes " +
                  std::to_string(gate_arity(*kind)) + " wires, got " +
                  std::to_string(count));
    }
    if (gate_takes_angle(*kind)) {
      std::string angle_tok;
      if (!(ls >> angle_tok)) {
        throw Error("line " + std::to_string(line_no) + ": " +
                    gate_name(*kind) + " needs an angle");
      }
      try {
        std::size_t used = 0;
        g.angle = std::stod(angle_tok, &used);
        if (used != angle_tok.size()) throw std::invalid_argument(angle_tok);
      } catch (const std::exception&) {
        throw Error("line " + std::to_string(line_no) + ": bad angle \"" +
                    angle_tok + "\"");
      }
    }
    if (ls >> extra) {
      throw Error("line " + std::to_string(line_no) +
                  ": trailing content \"" + extra + "\"");
    }
    gates.push_back(g);
  }

  int n = declared_qubits >= 0 ? declared_qubits : max_wire + 1;
  if (n < 1) {
    throw Error("circuit text declares no qubits and uses no wires");
  }
  Circuit c(n);
  for (const Gate& g : gates) c.append(g);
  return c;
}

std::string format_circuit(const Circuit& c) {
  std::string out = "# qubits " + std::to_string(c.n_qubits) + "\n";
  char buf[64];
  for (const Gate& g : c.gates) {
    out += gate_name(g.kind);
    out += ' ';
    out += wire_list(g);
    if (gate_takes_angle(g.kind)) {
      std::snprintf(buf, sizeof(buf), " %.17g", g.angle);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace qfed::qsim

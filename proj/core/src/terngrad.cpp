// SPDX-License-Identifier: Apache-2.0
#include "qfed/terngrad.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "qfed/error.hpp"

namespace qfed::terngrad {

double cyclic_wrap(double value, double period) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw Error("wrap period must be positive and finite");
  }
  if (!std::isfinite(value)) {
    throw Error("cannot wrap a non-finite value");
  }
  const double r = value - period * std::floor(value / period + 0.5);
  // Guard the half-open window against rounding at the seam.
  if (r >= period / 2.0) return r - period;
  if (r < -period / 2.0) return r + period;
  return r;
}

void cyclic_wrap_all(std::vector<double>& values, double period) {
  for (double& v : values) v = cyclic_wrap(v, period);
}

std::size_t TernaryUpdate::nnz() const {
  std::size_t n = 0;
  for (const std::int8_t v : t) n += (v != 0);
  return n;
}

TernaryUpdate ternarize(const std::vector<double>& g, Rng& rng) {
  double s = 0.0;
  for (const double v : g) {
    if (!std::isfinite(v)) {
      throw Error("cannot quantize a non-finite gradient component");
    }
    s = std::max(s, std::abs(v));
  }
  return ternarize_with_scale(g, float(s), rng);
}

TernaryUpdate ternarize_with_scale(const std::vector<double>& g, float scale,
                                   Rng& rng) {
  if (!(scale >= 0.0f) || !std::isfinite(scale)) {
    throw Error("quantization scale must be finite and non-negative");
  }
  TernaryUpdate u;
  u.scale = scale;
  u.t.assign(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw Error("cannot quantize a non-finite gradient component");
    }
    if (g[i] == 0.0) continue;
    if (scale == 0.0f) {
      throw Error("scale 0 with a non-zero gradient component");
    }
    const double p = std::min(std::abs(g[i]) / double(scale), 1.0);
    // One draw per non-zero component, taken before the threshold test so
    // identically seeded quantizations consume identical streams.
    const double roll = rng.uniform();
    if (roll < p) {
      u.t[i] = std::int8_t(g[i] > 0.0 ? 1 : -1);
    }
  }
  return u;
}

std::vector<double> dequantize(const TernaryUpdate& u) {
  std::vector<double> g(u.t.size(), 0.0);
  for (std::size_t i = 0; i < u.t.size(); ++i) {
    g[i] = double(u.scale) * double(u.t[i]);
  }
  return g;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v & 0xff));
  out.push_back(std::uint8_t((v >> 8) & 0xff));
  out.push_back(std::uint8_t((v >> 16) & 0xff));
  out.push_back(std::uint8_t((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  return std::uint32_t(in[at]) | (std::uint32_t(in[at + 1]) << 8) |
         (std::uint32_t(in[at + 2]) << 16) |
         (std::uint32_t(in[at + 3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> serialize_update(const TernaryUpdate& u) {
  if (u.t.size() > 0x7fffffffu) {
    throw Error("update too large for the wire format");
  }
  if (!(u.scale >= 0.0f) || !std::isfinite(u.scale)) {
    throw Error("quantization scale must be finite and non-negative");
  }
  std::vector<std::uint8_t> out;
  out.reserve(17 + 4 * u.nnz());
  put_u32(out, kWireMagic);
  out.push_back(kWireVersion);
  put_u32(out, std::uint32_t(u.t.size()));
  std::uint32_t scale_bits;
  static_assert(sizeof(scale_bits) == sizeof(u.scale));
  std::memcpy(&scale_bits, &u.scale, sizeof(scale_bits));
  put_u32(out, scale_bits);
  put_u32(out, std::uint32_t(u.nnz()));
  for (std::size_t i = 0; i < u.t.size(); ++i) {
    if (u.t[i] == 0) continue;
    if (u.t[i] != 1 && u.t[i] != -1) {
      throw Error("ternary entry outside {-1, 0, 1} at index " +
                  std::to_string(i));
    }
    std::uint32_t word = std::uint32_t(i);
    if (u.t[i] < 0) word |= 0x80000000u;
    put_u32(out, word);
  }
  return out;
}

TernaryUpdate parse_update(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 17) {
    throw Error("update blob truncated: " + std::to_string(bytes.size()) +
                " bytes");
  }
  if (get_u32(bytes, 0) != kWireMagic) {
    throw Error("update blob has the wrong magic");
  }
  if (bytes[4] != kWireVersion) {
    throw Error("update blob version " + std::to_string(bytes[4]) +
                " unsupported");
  }
  const std::uint32_t param_count = get_u32(bytes, 5);
  std::uint32_t scale_bits = get_u32(bytes, 9);
  float scale;
  std::memcpy(&scale, &scale_bits, sizeof(scale));
  if (!(scale >= 0.0f) || !std::isfinite(scale)) {
    throw Error("update blob scale is invalid");
  }
  const std::uint32_t entry_count = get_u32(bytes, 13);
  if (bytes.size() != 17 + std::size_t(entry_count) * 4) {
    throw Error("update blob size " + std::to_string(bytes.size()) +
                " does not match its entry count");
  }
  TernaryUpdate u;
  u.scale = scale;
  u.t.assign(param_count, 0);
  std::int64_t prev = -1;
  for (std::uint32_t e = 0; e < entry_count; ++e) {
    const std::uint32_t word = get_u32(bytes, 17 + std::size_t(e) * 4);
    const std::uint32_t index = word & 0x7fffffffu;
    if (std::int64_t(index) <= prev) {
      throw Error("update blob indices must increase strictly");
    }
    if (index >= param_count) {
      throw Error("update blob index " + std::to_string(index) +
                  " outside " + std::to_string(param_count) + " parameters");
    }
    prev = index;
    u.t[index] = (word & 0x80000000u) ? -1 : 1;
  }
  return u;
}

}  // namespace qfed::terngrad

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "qfed/rng.hpp"

// Stochastic ternary quantization of gradient vectors and its sparse wire
// format. Each component is sent as sign(g_i) with probability |g_i| / s
// and dropped otherwise, so the dequantized update s * t_i is an unbiased
// estimate of g_i whenever s >= max|g_i|.
namespace qfed::terngrad {

// Wrap into [-period/2, period/2). Parameters that live on a circle stay
// in one window; the boundary +period/2 maps to -period/2.
double cyclic_wrap(double value, double period);
void cyclic_wrap_all(std::vector<double>& values, double period);

struct TernaryUpdate {
  float scale = 0.0f;
  std::vector<std::int8_t> t;  // entries in {-1, 0, +1}

  std::size_t param_count() const { return t.size(); }
  std::size_t nnz() const;
};

// Scale s = max|g_i|; an all-zero gradient yields scale 0.
TernaryUpdate ternarize(const std::vector<double>& g, Rng& rng);

// Quantize against a caller-chosen scale. Components with |g_i| > s keep
// probability clamped at 1, which biases those components toward
// sign(g_i) * s; callers wanting unbiased estimates must pass
// s >= max|g_i|.
TernaryUpdate ternarize_with_scale(const std::vector<double>& g, float scale,
                                   Rng& rng);

std::vector<double> dequantize(const TernaryUpdate& u);

// Wire format, little endian throughout:
//   u32 magic 0x54475144, u8 version (1), u32 param_count, f32 scale,
//   u32 entry_count, then entry_count u32 words: bit 31 = sign (set means
//   -1), bits 0..30 = component index, indices strictly increasing.
// Total size is exactly 17 + 4 * nnz bytes.
inline constexpr std::uint32_t kWireMagic = 0x54475144u;
inline constexpr std::uint8_t kWireVersion = 1;

std::vector<std::uint8_t> serialize_update(const TernaryUpdate& u);
TernaryUpdate parse_update(const std::vector<std::uint8_t>& bytes);

}  // namespace qfed::terngrad

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qfed/error.hpp"
#include "qfed/terngrad.hpp"

using namespace qfed;
using namespace qfed::terngrad;

namespace {
const double kPi = std::acos(-1.0);
}

TEST_CASE("cyclic wrap lands in the half open window") {
  const double period = 2.0 * kPi;
  CHECK(cyclic_wrap(0.0, period) == doctest::Approx(0.0));
  CHECK(cyclic_wrap(3.0 * kPi, period) == doctest::Approx(-kPi));
  CHECK(cyclic_wrap(kPi, period) == doctest::Approx(-kPi));  // seam maps down
  CHECK(cyclic_wrap(-kPi, period) == doctest::Approx(-kPi));
  CHECK(cyclic_wrap(0.9 * kPi, period) == doctest::Approx(0.9 * kPi));
  CHECK(cyclic_wrap(-27.3, period) ==
        doctest::Approx(cyclic_wrap(cyclic_wrap(-27.3, period), period)));

  for (double v : {-123.4, -1.0, 0.0, 5.5, 9999.25}) {
    const double r = cyclic_wrap(v, period);
    CHECK(r >= -period / 2.0);
    CHECK(r < period / 2.0);
    // Difference is a whole number of periods.
    const double k = (v - r) / period;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }

  CHECK_THROWS_AS(cyclic_wrap(1.0, 0.0), Error);
  CHECK_THROWS_AS(cyclic_wrap(std::nan(""), period), Error);
}

TEST_CASE("ternarize uses the max magnitude as scale") {
  Rng rng(51);
  const std::vector<double> g = {0.5, -2.0, 0.0, 1.25};
  const TernaryUpdate u = ternarize(g, rng);
  CHECK(u.scale == 2.0f);
  CHECK(u.t.size() == 4);
  CHECK(u.t[1] == -1);  // |g| == scale fires with probability 1
  CHECK(u.t[2] == 0);   // exact zero never fires
  for (const auto v : u.t) CHECK((v == -1 || v == 0 || v == 1));

  const TernaryUpdate zero = ternarize({0.0, 0.0}, rng);
  CHECK(zero.scale == 0.0f);
  CHECK(zero.nnz() == 0);
  CHECK(dequantize(zero) == std::vector<double>{0.0, 0.0});

  CHECK_THROWS_AS(ternarize({std::nan("")}, rng), Error);
  CHECK_THROWS_AS(ternarize_with_scale({1.0}, 0.0f, rng), Error);
  CHECK_THROWS_AS(ternarize_with_scale({1.0}, -1.0f, rng), Error);
}

// Monte Carlo oracle: the sample mean of s * t_i must sit within five
// standard errors of g_i, with the variance taken from the quantizer's
// own distribution.
TEST_CASE("stochastic rounding is unbiased under a covering scale") {
  Rng rng(52);
  const std::vector<double> g = {0.7, -0.3, 0.05, -0.94, 0.0};
  const float scale = 1.0f;
  const int M = 20000;
  std::vector<double> sum(g.size(), 0.0);
  for (int m = 0; m < M; ++m) {
    const TernaryUpdate u = ternarize_with_scale(g, scale, rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum[i] += double(scale) * double(u.t[i]);
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double mean = sum[i] / M;
    const double p = std::abs(g[i]) / double(scale);
    const double var = double(scale) * double(scale) * p - g[i] * g[i];
    const double bound = 5.0 * std::sqrt(std::max(var, 1e-12) / M);
    CHECK(std::abs(mean - g[i]) < bound);
  }
}

TEST_CASE("an undersized scale clamps and saturates") {
  Rng rng(53);
  const std::vector<double> g = {3.0, -5.0};
  const float scale = 2.0f;
  const TernaryUpdate u = ternarize_with_scale(g, scale, rng);
  // Probability clamps at 1: these components always fire.
  CHECK(u.t[0] == 1);
  CHECK(u.t[1] == -1);
  const std::vector<double> back = dequantize(u);
  CHECK(back[0] == 2.0);   // saturated toward sign * scale
  CHECK(back[1] == -2.0);
}

TEST_CASE("quantization consumes one draw per non-zero component") {
  Rng a(54), b(54);
  const std::vector<double> g = {0.1, 0.0, -0.2, 0.0, 0.3};
  (void)ternarize_with_scale(g, 1.0f, a);
  (void)b.uniform();
  (void)b.uniform();
  (void)b.uniform();
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("wire format is exactly seventeen plus four per entry") {
  TernaryUpdate u;
  u.scale = 0.5f;
  u.t = {1, 0, -1, 0, 0, 1};
  const std::vector<std::uint8_t> bytes = serialize_update(u);
  CHECK(bytes.size() == 17 + 4 * 3);

  // Header bytes, little endian.
  CHECK(bytes[0] == 0x44);
  CHECK(bytes[1] == 0x51);
  CHECK(bytes[2] == 0x47);
  CHECK(bytes[3] == 0x54);
  CHECK(bytes[4] == 1);                      // version
  CHECK(bytes[5] == 6);                      // param_count
  CHECK((bytes[6] | bytes[7] | bytes[8]) == 0);
  CHECK(bytes[13] == 3);                     // entry_count

  // Entries: index 0 (+), index 2 (-), index 5 (+).
  CHECK(bytes[17] == 0);
  CHECK(bytes[20] == 0);
  CHECK(bytes[21] == 2);
  CHECK(bytes[24] == 0x80);                  // sign bit on index 2
  CHECK(bytes[25] == 5);

  const TernaryUpdate back = parse_update(bytes);
  CHECK(back.scale == u.scale);
  CHECK(back.t == u.t);
}

TEST_CASE("wire format round trips randomly") {
  Rng rng(55);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<double> g(n);
    for (auto& v : g) {
      v = rng.uniform() < 0.4 ? 0.0 : (rng.uniform() * 2.0 - 1.0);
    }
    const TernaryUpdate u = ternarize(g, rng);
    const TernaryUpdate back = parse_update(serialize_update(u));
    CHECK(back.scale == u.scale);
    CHECK(back.t == u.t);
    CHECK(serialize_update(u).size() == 17 + 4 * u.nnz());
  }
}

TEST_CASE("malformed update blobs are rejected") {
  TernaryUpdate u;
  u.scale = 1.0f;
  u.t = {1, -1};
  std::vector<std::uint8_t> ok = serialize_update(u);

  std::vector<std::uint8_t> bad = ok;
  bad[0] ^= 0xff;
  CHECK_THROWS_AS(parse_update(bad), Error);  // magic

  bad = ok;
  bad[4] = 9;
  CHECK_THROWS_AS(parse_update(bad), Error);  // version

  bad = ok;
  bad.pop_back();
  CHECK_THROWS_AS(parse_update(bad), Error);  // size mismatch

  bad = ok;
  // Swap the two entries so indices decrease.
  for (int i = 0; i < 4; ++i) std::swap(bad[17 + i], bad[21 + i]);
  CHECK_THROWS_AS(parse_update(bad), Error);

  bad = ok;
  bad[21] = 7;  // index past param_count
  CHECK_THROWS_AS(parse_update(bad), Error);

  CHECK_THROWS_AS(parse_update(std::vector<std::uint8_t>(5, 0)), Error);

  TernaryUpdate junk;
  junk.scale = 1.0f;
  junk.t = {3};
  CHECK_THROWS_AS(serialize_update(junk), Error);
}

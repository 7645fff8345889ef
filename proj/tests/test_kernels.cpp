// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "migkit/kernels/kernels.hpp"

using namespace migkit::kernels;

namespace {

std::uint64_t bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, 8);
  return b;
}

std::uint32_t bits(float v) {
  std::uint32_t b;
  std::memcpy(&b, &v, 4);
  return b;
}

// Random boxes including degenerate, identical and disjoint ones.
std::vector<double> random_boxes(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-50, 1050);
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<double> b(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    double x1 = u(rng), y1 = u(rng), x2 = u(rng), y2 = u(rng);
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    switch (pick(rng)) {
      case 0: x2 = x1; break;
      case 1: y2 = y1; break;
      case 2: x1 = 0, y1 = 0, x2 = 100, y2 = 100; break;
      default: break;
    }
    b[4 * i] = x1, b[4 * i + 1] = y1, b[4 * i + 2] = x2, b[4 * i + 3] = y2;
  }
  return b;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("half conversions round-trip every binary16 value") {
  for (std::uint32_t h = 0; h <= 0xffff; ++h) {
    const float f = half_to_float(static_cast<std::uint16_t>(h));
    if (std::isnan(f)) {
      CHECK(std::isnan(half_to_float(float_to_half(f))));
      continue;
    }
    REQUIRE(float_to_half(f) == h);
  }
}

TEST_CASE("float_to_half rounds to nearest even") {
  CHECK(float_to_half(1.0f) == 0x3c00);
  CHECK(float_to_half(65504.0f) == 0x7bff);
  CHECK(float_to_half(65520.0f) == 0x7c00);  // halfway to overflow rounds up to inf
  CHECK(float_to_half(1.0f + 1.0f / 2048) == 0x3c00);        // tie, even stays
  CHECK(float_to_half(1.0f + 3.0f / 2048) == 0x3c02);        // tie, odd rounds up
  CHECK(float_to_half(std::ldexp(1.0f, -24)) == 0x0001);     // smallest subnormal
  CHECK(float_to_half(std::ldexp(1.0f, -25)) == 0x0000);     // tie to even zero
  CHECK(float_to_half(-0.0f) == 0x8000);
}

TEST_CASE("scalar iou kernel on known pairs") {
  const double a[4] = {0, 0, 10, 10};
  const double boxes[12] = {0, 0, 10, 10, 5, 0, 15, 10, 10, 10, 20, 20};
  double out[3];
  scalar_table().iou_one_to_many(a, boxes, 3, out);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == doctest::Approx(1.0 / 3.0));
  CHECK(out[2] == 0.0);
}

TEST_CASE("avx2 variant matches the scalar reference") {
  const KernelTable* v = avx2_table();
  if (v == nullptr) {
    MESSAGE("AVX2/F16C variant unavailable on this build or CPU; equivalence skipped");
    return;
  }
  const KernelTable& s = scalar_table();
  std::mt19937_64 rng(42);

  SUBCASE("iou bit-identical") {
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 1000u}) {
      const auto boxes = random_boxes(rng, n);
      const auto a = random_boxes(rng, 1);
      std::vector<double> x(n), y(n);
      s.iou_one_to_many(a.data(), boxes.data(), n, x.data());
      v->iou_one_to_many(a.data(), boxes.data(), n, y.data());
      for (std::size_t i = 0; i < n; ++i) REQUIRE(bits(x[i]) == bits(y[i]));
    }
  }

  SUBCASE("axpy and narrow bit-identical") {
    std::uniform_real_distribution<float> u(-1e4f, 1e4f);
    for (std::size_t n : {1u, 7u, 8u, 9u, 4099u}) {
      std::vector<float> x(n);
      std::vector<std::uint16_t> h(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = u(rng);
        h[i] = float_to_half(u(rng) / 1000);
      }
      std::vector<double> acc_s(n, 0.25), acc_v(n, 0.25);
      s.axpy_f32(0.3, x.data(), acc_s.data(), n);
      v->axpy_f32(0.3, x.data(), acc_v.data(), n);
      s.axpy_f16(0.7, h.data(), acc_s.data(), n);
      v->axpy_f16(0.7, h.data(), acc_v.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(bits(acc_s[i]) == bits(acc_v[i]));

      std::vector<float> fs(n), fv(n);
      s.narrow_f32(acc_s.data(), fs.data(), n);
      v->narrow_f32(acc_v.data(), fv.data(), n);
      std::vector<std::uint16_t> hs(n), hv(n);
      s.narrow_f16(acc_s.data(), hs.data(), n);
      v->narrow_f16(acc_v.data(), hv.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(bits(fs[i]) == bits(fv[i]));
        REQUIRE(hs[i] == hv[i]);
      }
    }
  }

  SUBCASE("widen bit-identical over all halves") {
    std::vector<std::uint16_t> all(65536);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint16_t>(i);
    std::vector<float> a(all.size()), b(all.size());
    s.widen_f16(all.data(), a.data(), all.size());
    v->widen_f16(all.data(), b.data(), all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (std::isnan(a[i])) {
        REQUIRE(std::isnan(b[i]));
      } else {
        REQUIRE(bits(a[i]) == bits(b[i]));
      }
    }
  }

  SUBCASE("dot and diff within reordering tolerance") {
    std::normal_distribution<float> g(0, 1);
    for (std::size_t n : {1u, 15u, 16u, 512u, 3001u}) {
      std::vector<float> a(n), b(n);
      std::vector<std::uint16_t> ha(n), hb(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = g(rng), b[i] = g(rng);
        ha[i] = float_to_half(a[i]), hb[i] = float_to_half(b[i]);
      }
      double mag = 0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(double(a[i]) * b[i]);
      CHECK(std::abs(s.dot_f32(a.data(), b.data(), n) - v->dot_f32(a.data(), b.data(), n)) <=
            1e-12 * (1 + mag));

      double m1, q1, m2, q2;
      s.diff_f32(a.data(), b.data(), n, &m1, &q1);
      v->diff_f32(a.data(), b.data(), n, &m2, &q2);
      CHECK(bits(m1) == bits(m2));
      CHECK(q1 == doctest::Approx(q2).epsilon(1e-12));
      s.diff_f16(ha.data(), hb.data(), n, &m1, &q1);
      v->diff_f16(ha.data(), hb.data(), n, &m2, &q2);
      CHECK(bits(m1) == bits(m2));
      CHECK(q1 == doctest::Approx(q2).epsilon(1e-12));
    }
  }
}

TEST_CASE("forced scalar selection") {
  const char* forced = std::getenv("MIGKIT_FORCE_SCALAR");
  if (forced != nullptr && std::string(forced) == "1") {
    CHECK(active().isa == Isa::scalar);
  } else if (avx2_table() != nullptr) {
    CHECK(active().isa == Isa::avx2);
  }
  MESSAGE("active kernels: " << std::string(isa_name(active().isa)));
}

TEST_CASE("narrow_f16 rounds through binary32") {
  // 1 + 2^-11 + 2^-30 rounds to 1 + 2^-11 in binary32, a binary16 tie that
  // goes to even (1.0); rounding f64 straight to f16 would go up.
  const double x = 1.0 + std::ldexp(1.0, -11) + std::ldexp(1.0, -30);
  std::uint16_t h;
  scalar_table().narrow_f16(&x, &h, 1);
  CHECK(h == 0x3c00);
}

}

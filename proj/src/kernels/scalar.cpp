// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>

#include "variants.hpp"

namespace migkit::kernels {

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1fu;
  std::uint32_t mant = h & 0x3ffu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      // Subnormal half: renormalize into an f32 normal.
      std::uint32_t e = 127 - 15 + 1;
      while ((mant & 0x400u) == 0) {
        mant <<= 1;
        --e;
      }
      mant &= 0x3ffu;
      bits = sign | (e << 23) | (mant << 13);
    }
  } else if (exp == 0x1f) {
    bits = sign | 0x7f800000u | (mant << 13);
    if (mant != 0) bits |= 0x00400000u;  // quiet NaN, as F16C does
  } else {
    bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

std::uint16_t float_to_half(float f) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  const std::uint32_t sign = (x >> 16) & 0x8000u;
  const std::uint32_t absx = x & 0x7fffffffu;

  if (absx >= 0x7f800000u) {
    if (absx == 0x7f800000u) return static_cast<std::uint16_t>(sign | 0x7c00u);
    return static_cast<std::uint16_t>(sign | 0x7e00u | ((absx >> 13) & 0x3ffu));
  }
  // 65520 and above round to infinity (65504 has an odd mantissa).
  if (absx >= 0x477ff000u) return static_cast<std::uint16_t>(sign | 0x7c00u);

  if (absx < 0x38800000u) {
    // Result is a half subnormal (or zero), unit 2^-24.
    const std::uint32_t e = absx >> 23;
    const std::uint32_t shift = 126 - e;
    if (shift > 24) return static_cast<std::uint16_t>(sign);
    const std::uint32_t m = (absx & 0x7fffffu) | 0x800000u;
    std::uint32_t res = m >> shift;
    const std::uint32_t rem = m & ((1u << shift) - 1);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (res & 1u))) ++res;
    return static_cast<std::uint16_t>(sign | res);
  }

  std::uint32_t res = (absx - 0x38000000u) >> 13;
  const std::uint32_t rem = absx & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (res & 1u))) ++res;
  return static_cast<std::uint16_t>(sign | res);
}

namespace {

void iou_one_to_many(const double* a, const double* boxes, std::size_t n,
                     double* out) {
  const double area_a = (a[2] - a[0]) * (a[3] - a[1]);
  for (std::size_t i = 0; i < n; ++i) {
    const double* b = boxes + 4 * i;
    const double iw = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
    const double ih = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
    const double inter = iw * ih;
    const double area_b = (b[2] - b[0]) * (b[3] - b[1]);
    const double uni = (area_a + area_b) - inter;
    out[i] = uni > 0.0 ? inter / uni : 0.0;
  }
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

void axpy_f32(double w, const float* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = acc[i] + w * static_cast<double>(x[i]);
}

void axpy_f16(double w, const std::uint16_t* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = acc[i] + w * static_cast<double>(half_to_float(x[i]));
  }
}

void narrow_f32(const double* src, float* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(src[i]);
}

void narrow_f16(const double* src, std::uint16_t* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = float_to_half(static_cast<float>(src[i]));
  }
}

void widen_f16(const std::uint16_t* src, float* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = half_to_float(src[i]);
}

void diff_f32(const float* a, const float* b, std::size_t n, double* max_abs,
              double* sum_sq) {
  double m = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    m = std::max(m, std::fabs(d));
    s += d * d;
  }
  *max_abs = m;
  *sum_sq = s;
}

void diff_f16(const std::uint16_t* a, const std::uint16_t* b, std::size_t n,
              double* max_abs, double* sum_sq) {
  double m = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(half_to_float(a[i])) -
                     static_cast<double>(half_to_float(b[i]));
    m = std::max(m, std::fabs(d));
    s += d * d;
  }
  *max_abs = m;
  *sum_sq = s;
}

}  // namespace

namespace detail {

const KernelTable& scalar_impl() {
  static const KernelTable table{
      Isa::scalar, iou_one_to_many, dot_f32,    axpy_f32, axpy_f16,
      narrow_f32,  narrow_f16,      widen_f16,  diff_f32, diff_f16,
  };
  return table;
}

}  // namespace detail
}  // namespace migkit::kernels

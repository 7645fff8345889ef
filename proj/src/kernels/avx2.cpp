// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2 + F16C variants. Compiled with -mavx2 -mf16c; only reached after the
// dispatcher has confirmed CPU support. FMA is deliberately not enabled so the
// exact kernels round identically to the scalar reference.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "variants.hpp"

namespace migkit::kernels {
namespace {

void iou_one_to_many(const double* a, const double* boxes, std::size_t n,
                     double* out) {
  const __m256d ax1 = _mm256_set1_pd(a[0]);
  const __m256d ay1 = _mm256_set1_pd(a[1]);
  const __m256d ax2 = _mm256_set1_pd(a[2]);
  const __m256d ay2 = _mm256_set1_pd(a[3]);
  const __m256d area_a =
      _mm256_mul_pd(_mm256_sub_pd(ax2, ax1), _mm256_sub_pd(ay2, ay1));
  const __m256d zero = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* p = boxes + 4 * i;
    const __m256d r0 = _mm256_loadu_pd(p);
    const __m256d r1 = _mm256_loadu_pd(p + 4);
    const __m256d r2 = _mm256_loadu_pd(p + 8);
    const __m256d r3 = _mm256_loadu_pd(p + 12);
    // 4x4 transpose: rows of (x1,y1,x2,y2) -> columns.
    const __m256d t0 = _mm256_unpacklo_pd(r0, r1);
    const __m256d t1 = _mm256_unpackhi_pd(r0, r1);
    const __m256d t2 = _mm256_unpacklo_pd(r2, r3);
    const __m256d t3 = _mm256_unpackhi_pd(r2, r3);
    const __m256d bx1 = _mm256_permute2f128_pd(t0, t2, 0x20);
    const __m256d bx2 = _mm256_permute2f128_pd(t0, t2, 0x31);
    const __m256d by1 = _mm256_permute2f128_pd(t1, t3, 0x20);
    const __m256d by2 = _mm256_permute2f128_pd(t1, t3, 0x31);

    const __m256d iw = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(bx2, ax2), _mm256_max_pd(bx1, ax1)), zero);
    const __m256d ih = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(by2, ay2), _mm256_max_pd(by1, ay1)), zero);
    const __m256d inter = _mm256_mul_pd(iw, ih);
    const __m256d area_b =
        _mm256_mul_pd(_mm256_sub_pd(bx2, bx1), _mm256_sub_pd(by2, by1));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, area_b), inter);
    const __m256d positive = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
    const __m256d ratio = _mm256_div_pd(inter, uni);
    _mm256_storeu_pd(out + i, _mm256_and_pd(ratio, positive));
  }
  if (i < n) {
    detail::scalar_impl().iou_one_to_many(a, boxes + 4 * i, n - i, out + i);
  }
}

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = _mm256_add_pd(
        acc0, _mm256_mul_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                            _mm256_cvtps_pd(_mm256_castps256_ps128(vb))));
    acc1 = _mm256_add_pd(
        acc1, _mm256_mul_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                            _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1))));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void axpy_f32(double w, const float* x, double* acc, std::size_t n) {
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(acc + i,
                     _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(vw, vx)));
  }
  for (; i < n; ++i) acc[i] = acc[i] + w * static_cast<double>(x[i]);
}

void axpy_f16(double w, const std::uint16_t* x, double* acc, std::size_t n) {
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 f = _mm256_cvtph_ps(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(x + i)));
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(f));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(f, 1));
    _mm256_storeu_pd(acc + i,
                     _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(vw, lo)));
    _mm256_storeu_pd(acc + i + 4, _mm256_add_pd(_mm256_loadu_pd(acc + i + 4),
                                                _mm256_mul_pd(vw, hi)));
  }
  for (; i < n; ++i) {
    acc[i] = acc[i] + w * static_cast<double>(half_to_float(x[i]));
  }
}

void narrow_f32(const double* src, float* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm_storeu_ps(dst + i, _mm256_cvtpd_ps(_mm256_loadu_pd(src + i)));
  }
  for (; i < n; ++i) dst[i] = static_cast<float>(src[i]);
}

void narrow_f16(const double* src, std::uint16_t* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128 lo = _mm256_cvtpd_ps(_mm256_loadu_pd(src + i));
    const __m128 hi = _mm256_cvtpd_ps(_mm256_loadu_pd(src + i + 4));
    const __m256 f = _mm256_insertf128_ps(_mm256_castps128_ps256(lo), hi, 1);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + i),
                     _mm256_cvtps_ph(f, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
  }
  for (; i < n; ++i) dst[i] = float_to_half(static_cast<float>(src[i]));
}

void widen_f16(const std::uint16_t* src, float* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_cvtph_ps(_mm_loadu_si128(
                                  reinterpret_cast<const __m128i*>(src + i))));
  }
  for (; i < n; ++i) dst[i] = half_to_float(src[i]);
}

// Lane-wise max/sum over f64 differences; the caller folds the tail.
struct DiffAcc {
  __m256d max = _mm256_setzero_pd();
  __m256d sum = _mm256_setzero_pd();
  void add(__m256d a, __m256d b) {
    const __m256d d = _mm256_sub_pd(a, b);
    const __m256d abs = _mm256_andnot_pd(_mm256_set1_pd(-0.0), d);
    max = _mm256_max_pd(abs, max);
    sum = _mm256_add_pd(sum, _mm256_mul_pd(d, d));
  }
  void finish(double* max_abs, double* sum_sq) const {
    alignas(32) double m[4];
    _mm256_store_pd(m, max);
    *max_abs = std::max(std::max(m[0], m[1]), std::max(m[2], m[3]));
    *sum_sq = hsum(sum);
  }
};

void diff_f32(const float* a, const float* b, std::size_t n, double* max_abs,
              double* sum_sq) {
  DiffAcc acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc.add(_mm256_cvtps_pd(_mm_loadu_ps(a + i)), _mm256_cvtps_pd(_mm_loadu_ps(b + i)));
  }
  acc.finish(max_abs, sum_sq);
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    *max_abs = std::max(*max_abs, std::fabs(d));
    *sum_sq += d * d;
  }
}

void diff_f16(const std::uint16_t* a, const std::uint16_t* b, std::size_t n,
              double* max_abs, double* sum_sq) {
  DiffAcc acc;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 fa =
        _mm256_cvtph_ps(_mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i)));
    const __m256 fb =
        _mm256_cvtph_ps(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b + i)));
    acc.add(_mm256_cvtps_pd(_mm256_castps256_ps128(fa)),
            _mm256_cvtps_pd(_mm256_castps256_ps128(fb)));
    acc.add(_mm256_cvtps_pd(_mm256_extractf128_ps(fa, 1)),
            _mm256_cvtps_pd(_mm256_extractf128_ps(fb, 1)));
  }
  acc.finish(max_abs, sum_sq);
  for (; i < n; ++i) {
    const double d = static_cast<double>(half_to_float(a[i])) -
                     static_cast<double>(half_to_float(b[i]));
    *max_abs = std::max(*max_abs, std::fabs(d));
    *sum_sq += d * d;
  }
}

}  // namespace

namespace detail {

const KernelTable& avx2_impl() {
  static const KernelTable table{
      Isa::avx2,  iou_one_to_many, dot_f32,   axpy_f32, axpy_f16,
      narrow_f32, narrow_f16,      widen_f16, diff_f32, diff_f16,
  };
  return table;
}

}  // namespace detail
}  // namespace migkit::kernels

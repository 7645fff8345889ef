// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops used by geometry, dataforge and mergekit.
//
// Every kernel has a portable scalar reference implementation and, where the
// target supports it, an AVX2/F16C variant. The variant is chosen once at
// runtime from CPUID; setting MIGKIT_FORCE_SCALAR=1 pins the scalar table.
//
// Exactness contract between variants:
//   iou_one_to_many, axpy_*, narrow_*, widen_f16   bit-identical
//   diff_*: max_abs bit-identical, sum_sq within summation reordering
//   dot_f32                                          within summation reordering

#pragma once

#include <cstddef>
#include <cstdint>

namespace migkit::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;

  /// out[i] = IoU(a, boxes[i]); boxes are packed (x1,y1,x2,y2) quadruples.
  void (*iou_one_to_many)(const double* a, const double* boxes, std::size_t n,
                          double* out);

  double (*dot_f32)(const float* a, const float* b, std::size_t n);

  /// acc[i] += w * x[i], f64 accumulation.
  void (*axpy_f32)(double w, const float* x, double* acc, std::size_t n);
  void (*axpy_f16)(double w, const std::uint16_t* x, double* acc,
                   std::size_t n);

  void (*narrow_f32)(const double* src, float* dst, std::size_t n);
  /// f64 -> f32 -> f16, round-to-nearest-even at each step.
  void (*narrow_f16)(const double* src, std::uint16_t* dst, std::size_t n);
  void (*widen_f16)(const std::uint16_t* src, float* dst, std::size_t n);

  void (*diff_f32)(const float* a, const float* b, std::size_t n,
                   double* max_abs, double* sum_sq);
  void (*diff_f16)(const std::uint16_t* a, const std::uint16_t* b,
                   std::size_t n, double* max_abs, double* sum_sq);
};

/// Table selected for this process (CPU features + MIGKIT_FORCE_SCALAR).
const KernelTable& active();

const KernelTable& scalar_table();

/// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2/F16C.
const KernelTable* avx2_table();

const char* isa_name(Isa isa);

// Scalar IEEE binary16 conversions, exposed for tests and small call sites.
float half_to_float(std::uint16_t h);
std::uint16_t float_to_half(float f);

}  // namespace migkit::kernels

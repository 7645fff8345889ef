// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Axis-aligned box arithmetic with continuous-area semantics:
// area = (x2 - x1) * (y2 - y1), so a box with x1 == x2 has zero area.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace migkit {

/// Corner-form box. Canonical when x1 <= x2 and y1 <= y2 and all coordinates
/// are finite.
struct BBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  /// Throws ValidationError for non-finite or non-canonical corners.
  static BBox checked(double x1, double y1, double x2, double y2);

  /// Swaps corners into canonical order. `swapped` (optional) reports whether
  /// any swap happened. Throws ValidationError on non-finite input.
  static BBox canonical(double x1, double y1, double x2, double y2,
                        bool* swapped = nullptr);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool is_canonical() const;

  bool operator==(const BBox&) const = default;
};

static_assert(sizeof(BBox) == 4 * sizeof(double), "BBox must pack as 4 doubles");

enum class SpaceKind { pixel, norm1000 };

/// Largest coordinate of the 0-999 normalized grid.
inline constexpr double kNorm1000Max = 999.0;
/// norm1000 <-> pixel scale divisor (the grid is treated as 1000 bins).
inline constexpr double kNorm1000Divisor = 1000.0;

struct CoordSpace {
  SpaceKind kind = SpaceKind::norm1000;
  int width = 0;   // pixel spaces only
  int height = 0;  // pixel spaces only

  static CoordSpace pixel(int width, int height);
  static CoordSpace norm1000() { return {}; }

  bool operator==(const CoordSpace&) const = default;
};

std::string_view to_string(SpaceKind kind);
/// Accepts "pixel" or "norm1000"; throws ValidationError otherwise.
SpaceKind parse_space_kind(std::string_view text);

/// A box inside one image of an instance.
struct Region {
  std::size_t image_index = 0;
  BBox box;
  CoordSpace space;

  bool operator==(const Region&) const = default;
};

/// Intersection over union of two canonical boxes in the same space.
/// Zero-area unions (e.g. two identical degenerate boxes) yield 0.
double iou(const BBox& a, const BBox& b);

/// Space-checked IoU; throws ValidationError when the spaces differ.
double iou(const Region& a, const Region& b);

/// IoU of `a` against each box in `boxes`, via the dispatched SIMD kernel.
void iou_one_to_many(const BBox& a, std::span<const BBox> boxes,
                     std::span<double> out);

/// Strict comparison: true iff iou(pred, gt) > threshold.
bool hit(const BBox& pred, const BBox& gt, double threshold = 0.5);

/// Linear rescale between spaces. norm1000 -> pixel maps c to c * dim / 1000.
/// Throws ValidationError for a pixel space with a zero dimension.
BBox convert(const BBox& box, const CoordSpace& from, const CoordSpace& to);

/// Clamps every coordinate into [lo, hi]; reports whether anything moved.
BBox clamp(const BBox& box, double lo_x, double lo_y, double hi_x, double hi_y,
           bool* changed = nullptr);

std::string to_string(const BBox& box);

}  // namespace migkit

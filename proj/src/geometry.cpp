// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "migkit/error.hpp"
#include "migkit/kernels/kernels.hpp"

namespace migkit {

namespace {

void require_finite(double x1, double y1, double x2, double y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw ValidationError("box coordinates must be finite");
  }
}

void require_valid(const CoordSpace& s) {
  if (s.kind == SpaceKind::pixel && (s.width < 1 || s.height < 1)) {
    throw ValidationError("pixel coordinate space needs width and height >= 1");
  }
}

// convert() maps c -> c * extent(to) / extent(from), per axis.
double extent_x(const CoordSpace& s) {
  return s.kind == SpaceKind::pixel ? static_cast<double>(s.width) : kNorm1000Divisor;
}
double extent_y(const CoordSpace& s) {
  return s.kind == SpaceKind::pixel ? static_cast<double>(s.height) : kNorm1000Divisor;
}

}  // namespace

BBox BBox::checked(double x1, double y1, double x2, double y2) {
  require_finite(x1, y1, x2, y2);
  if (x1 > x2 || y1 > y2) {
    throw ValidationError("box corners are not canonical (need x1<=x2, y1<=y2)");
  }
  return BBox{x1, y1, x2, y2};
}

BBox BBox::canonical(double x1, double y1, double x2, double y2, bool* swapped) {
  require_finite(x1, y1, x2, y2);
  bool any = false;
  if (x1 > x2) {
    std::swap(x1, x2);
    any = true;
  }
  if (y1 > y2) {
    std::swap(y1, y2);
    any = true;
  }
  if (swapped != nullptr) *swapped = any;
  return BBox{x1, y1, x2, y2};
}

bool BBox::is_canonical() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 <= x2 && y1 <= y2;
}

CoordSpace CoordSpace::pixel(int width, int height) {
  CoordSpace s{SpaceKind::pixel, width, height};
  require_valid(s);
  return s;
}

std::string_view to_string(SpaceKind kind) {
  return kind == SpaceKind::pixel ? "pixel" : "norm1000";
}

SpaceKind parse_space_kind(std::string_view text) {
  if (text == "pixel") return SpaceKind::pixel;
  if (text == "norm1000") return SpaceKind::norm1000;
  throw ValidationError("unknown coordinate space '" + std::string(text) + "'");
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = (a.area() + b.area()) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou(const Region& a, const Region& b) {
  if (!(a.space == b.space)) {
    throw ValidationError("iou: boxes live in different coordinate spaces");
  }
  return iou(a.box, b.box);
}

void iou_one_to_many(const BBox& a, std::span<const BBox> boxes,
                     std::span<double> out) {
  if (out.size() < boxes.size()) {
    throw ValidationError("iou_one_to_many: output span too small");
  }
  kernels::active().iou_one_to_many(&a.x1, &boxes.data()->x1, boxes.size(),
                                    out.data());
}

bool hit(const BBox& pred, const BBox& gt, double threshold) {
  return iou(pred, gt) > threshold;
}

BBox convert(const BBox& box, const CoordSpace& from, const CoordSpace& to) {
  require_valid(from);
  require_valid(to);
  if (from == to) return box;
  const double fx = extent_x(from), fy = extent_y(from);
  const double tx = extent_x(to), ty = extent_y(to);
  return BBox{box.x1 * tx / fx, box.y1 * ty / fy, box.x2 * tx / fx,
              box.y2 * ty / fy};
}

BBox clamp(const BBox& box, double lo_x, double lo_y, double hi_x, double hi_y,
           bool* changed) {
  BBox out{std::clamp(box.x1, lo_x, hi_x), std::clamp(box.y1, lo_y, hi_y),
           std::clamp(box.x2, lo_x, hi_x), std::clamp(box.y2, lo_y, hi_y)};
  if (changed != nullptr) *changed = !(out == box);
  return out;
}

std::string to_string(const BBox& box) {
  std::ostringstream os;
  os << '(' << box.x1 << ',' << box.y1 << "),(" << box.x2 << ',' << box.y2 << ')';
  return os.str();
}

}  // namespace migkit

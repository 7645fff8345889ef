// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Extraction of boxes, image selections and referring expressions from free
// model text.
//
// Box grammar, tried tier by tier; the first tier with at least one match
// wins and later tiers never contribute:
//   1. <|box_start|>(x1,y1),(x2,y2)<|box_end|>
//   2. bare tuple pair (x1,y1),(x2,y2)
//   3. bracketed quadruple [x1, y1, x2, y2]
// Image labels ("Image2", "Image-2", "image 2", "the second image") preceding
// a box attribute it to that image.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "migkit/geometry.hpp"

namespace migkit {

enum class ParseFlag : std::uint8_t {
  fallback_used = 1u << 0,    // winning tier was not the token form
  corners_swapped = 1u << 1,
  clamped = 1u << 2,          // a coordinate fell outside [0, 999]
  no_match = 1u << 3,         // non-empty text without any parseable box
};

class ParseFlags {
 public:
  bool has(ParseFlag f) const { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
  void set(ParseFlag f) { bits_ |= static_cast<std::uint8_t>(f); }
  bool empty() const { return bits_ == 0; }
  std::vector<std::string> names() const;
  static ParseFlags from_names(const std::vector<std::string>& names);

  bool operator==(const ParseFlags&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ParsedBox {
  std::optional<std::size_t> image_index;  // 0-based, from a preceding label
  BBox box;                                // norm1000

  bool operator==(const ParsedBox&) const = default;
};

struct ParsedAnswer {
  std::vector<ParsedBox> boxes;
  std::optional<std::string> referring_text;
  std::string raw;
  ParseFlags flags;
  int tier = 0;  // 0 when nothing matched

  bool operator==(const ParsedAnswer&) const = default;
};

/// Never throws; an empty box list is a valid (missed) answer. Coordinates
/// are clamped into [0, max_coord]; the default is the norm1000 grid, pass
/// infinity when the model answers in pixels.
ParsedAnswer parse_boxes(std::string_view text, double max_coord = kNorm1000Max);

/// First "Image<K>"-style or ordinal mention with 1 <= K <= n_images,
/// returned 0-based.
std::optional<std::size_t> parse_image_choice(std::string_view text,
                                              std::size_t n_images);

/// Strips role prefixes, special tokens and quotes from a step-1 answer.
std::string extract_referring(std::string_view text);

/// Token form of a box; parse_boxes() inverts it exactly.
std::string render_box_token(const BBox& box);

/// Shortest round-tripping decimal form ("12", "12.5").
std::string format_coord(double v);

}  // namespace migkit

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Splits one high-resolution image into a row-major grid of tiles so a
// single-image grounding question becomes a group-grounding instance, and
// maps tile-local answers back to source pixels.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "migkit/benchdata.hpp"
#include "migkit/image_io.hpp"

namespace migkit {

struct GridSpec {
  std::size_t rows = 1;
  std::size_t cols = 1;
  int overlap = 0;  // pixels added on each interior side, clamped to the image

  bool operator==(const GridSpec&) const = default;
};

/// Parses "RxC" (e.g. "2x3"). Throws ConfigError on anything else.
GridSpec parse_grid(std::string_view text);

struct TileGrid {
  int width = 0;   // source image
  int height = 0;
  GridSpec spec;
  std::vector<image_io::PixelRect> tiles;  // row-major

  const image_io::PixelRect& tile(std::size_t row, std::size_t col) const {
    return tiles.at(row * spec.cols + col);
  }
};

/// Ceiling-first division: the first W % cols columns (and H % rows rows)
/// get one extra pixel. Throws ValidationError when rows * cols < 2, the
/// image is smaller than the grid, or the overlap reaches the base tile size.
TileGrid slice(int width, int height, const GridSpec& spec);

/// Smallest grid whose tiles are at most `max_side` pixels on each side,
/// split at least in two along the long side.
GridSpec default_grid(int width, int height, int max_side = 1024);

/// Translates a tile-local pixel box to source pixels. Throws
/// ValidationError when the tile index is out of range or the box leaves
/// the tile.
BBox map_back(const TileGrid& grid, std::size_t tile_index, const BBox& box);

/// Writes tile crops as <out_dir>/<stem>_tile<k>.png, returning the paths.
std::vector<std::filesystem::path> write_tiles(const std::filesystem::path& source,
                                               const TileGrid& grid,
                                               const std::filesystem::path& out_dir,
                                               const std::string& stem);

/// Group-grounding instance over the tile images. With a source-space
/// `target`, ground truth is that box inside the first tile containing it
/// (or, failing that, the tile overlapping it most, clipped). Without one
/// the instance is marked meta.unlabeled. meta also records the source
/// image and every tile rect so grid_from_meta() can rebuild the grid.
Instance to_group_instance(const std::string& id, const std::string& question,
                           const TileGrid& grid,
                           const std::vector<std::filesystem::path>& tile_paths,
                           const std::string& source_path,
                           const std::optional<BBox>& target = std::nullopt);

TileGrid grid_from_meta(const Json& meta);

}  // namespace migkit

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/hislicer.hpp"

#include <algorithm>
#include <charconv>

#include "migkit/error.hpp"

namespace migkit {

namespace {

struct Span1D {
  int start;
  int size;
};

std::vector<Span1D> divide(int extent, std::size_t parts) {
  const int n = static_cast<int>(parts);
  const int base = extent / n;
  const int extra = extent % n;
  std::vector<Span1D> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({i * base + std::min(i, extra), base + (i < extra ? 1 : 0)});
  }
  return out;
}

std::size_t ceil_div(int a, int b) { return static_cast<std::size_t>((a + b - 1) / b); }

}  // namespace

GridSpec parse_grid(std::string_view text) {
  const auto x = text.find_first_of("xX");
  GridSpec g;
  if (x == std::string_view::npos) throw ConfigError("grid must look like RxC, got '" + std::string(text) + "'");
  const auto parse = [&](std::string_view part, std::size_t& v) {
    const auto* end = part.data() + part.size();
    const auto [p, ec] = std::from_chars(part.data(), end, v);
    if (ec != std::errc() || p != end || v == 0) {
      throw ConfigError("grid must look like RxC, got '" + std::string(text) + "'");
    }
  };
  parse(text.substr(0, x), g.rows);
  parse(text.substr(x + 1), g.cols);
  return g;
}

TileGrid slice(int width, int height, const GridSpec& spec) {
  if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
  if (spec.rows < 1 || spec.cols < 1 || spec.rows * spec.cols < 2) {
    throw ValidationError("a grid needs at least two tiles");
  }
  if (spec.cols > static_cast<std::size_t>(width) || spec.rows > static_cast<std::size_t>(height)) {
    throw ValidationError("grid is finer than the image");
  }
  if (spec.overlap < 0) throw ValidationError("overlap must be >= 0");
  const int base_w = width / static_cast<int>(spec.cols);
  const int base_h = height / static_cast<int>(spec.rows);
  if (spec.overlap >= std::min(base_w, base_h)) {
    throw ValidationError("overlap " + std::to_string(spec.overlap) + " reaches the tile size");
  }
  TileGrid g{width, height, spec, {}};
  const auto xs = divide(width, spec.cols);
  const auto ys = divide(height, spec.rows);
  for (const auto& y : ys) {
    for (const auto& x : xs) {
      const int x0 = std::max(0, x.start - spec.overlap);
      const int y0 = std::max(0, y.start - spec.overlap);
      const int x1 = std::min(width, x.start + x.size + spec.overlap);
      const int y1 = std::min(height, y.start + y.size + spec.overlap);
      g.tiles.push_back({x0, y0, x1 - x0, y1 - y0});
    }
  }
  return g;
}

GridSpec default_grid(int width, int height, int max_side) {
  if (width < 1 || height < 1 || max_side < 1) throw ValidationError("dimensions must be positive");
  GridSpec g{ceil_div(height, max_side), ceil_div(width, max_side), 0};
  if (g.rows * g.cols < 2) {
    if (width >= height) g.cols = 2;
    else g.rows = 2;
  }
  return g;
}

BBox map_back(const TileGrid& grid, std::size_t tile_index, const BBox& box) {
  if (tile_index >= grid.tiles.size()) {
    throw ValidationError("tile index " + std::to_string(tile_index) + " out of range");
  }
  const auto& t = grid.tiles[tile_index];
  if (!box.is_canonical() || box.x1 < 0 || box.y1 < 0 || box.x2 > t.width || box.y2 > t.height) {
    throw ValidationError("box " + to_string(box) + " exceeds tile " + std::to_string(tile_index));
  }
  return BBox{box.x1 + t.x, box.y1 + t.y, box.x2 + t.x, box.y2 + t.y};
}

std::vector<std::filesystem::path> write_tiles(const std::filesystem::path& source,
                                               const TileGrid& grid,
                                               const std::filesystem::path& out_dir,
                                               const std::string& stem) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> out;
  for (std::size_t k = 0; k < grid.tiles.size(); ++k) {
    auto p = out_dir / (stem + "_tile" + std::to_string(k) + ".png");
    image_io::write_crop(source, grid.tiles[k], p);
    out.push_back(std::move(p));
  }
  return out;
}

Instance to_group_instance(const std::string& id, const std::string& question,
                           const TileGrid& grid,
                           const std::vector<std::filesystem::path>& tile_paths,
                           const std::string& source_path, const std::optional<BBox>& target) {
  if (tile_paths.size() != grid.tiles.size()) {
    throw ValidationError("one path per tile is required");
  }
  Instance inst;
  inst.id = id;
  inst.task = TaskKind::group_grounding;
  inst.query_text = question;
  Json tiles = Json::array();
  for (std::size_t k = 0; k < grid.tiles.size(); ++k) {
    const auto& t = grid.tiles[k];
    inst.images.push_back({tile_paths[k].string(), t.width, t.height});
    tiles.push_back({t.x, t.y, t.width, t.height});
  }
  inst.meta = {{"source", {{"path", source_path}, {"width", grid.width}, {"height", grid.height}}},
               {"grid", {{"rows", grid.spec.rows}, {"cols", grid.spec.cols}, {"overlap", grid.spec.overlap}}},
               {"tiles", tiles}};

  if (!target) {
    inst.meta["unlabeled"] = true;
    return inst;
  }
  std::optional<std::size_t> best;
  double best_area = 0;
  for (std::size_t k = 0; k < grid.tiles.size(); ++k) {
    const auto& t = grid.tiles[k];
    const double ix = std::min<double>(target->x2, t.x + t.width) - std::max<double>(target->x1, t.x);
    const double iy = std::min<double>(target->y2, t.y + t.height) - std::max<double>(target->y1, t.y);
    const bool inside = target->x1 >= t.x && target->y1 >= t.y && target->x2 <= t.x + t.width &&
                        target->y2 <= t.y + t.height;
    if (inside) {
      best = k;
      break;
    }
    if (ix > 0 && iy > 0 && ix * iy > best_area) {
      best_area = ix * iy;
      best = k;
    }
  }
  if (!best) throw ValidationError("target box lies outside the image");
  const auto& t = grid.tiles[*best];
  const BBox local = clamp(BBox{target->x1 - t.x, target->y1 - t.y, target->x2 - t.x, target->y2 - t.y},
                           0, 0, t.width, t.height);
  inst.ground_truth = {{*best, local, CoordSpace::pixel(t.width, t.height)}};
  return inst;
}

TileGrid grid_from_meta(const Json& meta) {
  try {
    TileGrid g;
    g.width = meta.at("source").at("width").get<int>();
    g.height = meta.at("source").at("height").get<int>();
    g.spec.rows = meta.at("grid").at("rows").get<std::size_t>();
    g.spec.cols = meta.at("grid").at("cols").get<std::size_t>();
    g.spec.overlap = meta.at("grid").at("overlap").get<int>();
    for (const auto& t : meta.at("tiles")) {
      g.tiles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>(), t.at(3).get<int>()});
    }
    return g;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("instance meta carries no tile grid: ") + e.what());
  }
}

}  // namespace migkit

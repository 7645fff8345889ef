// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "migkit/error.hpp"
#include "migkit/hislicer.hpp"
#include "migkit/image_io.hpp"

using namespace migkit;
using fixtures::TempDir;
using image_io::PixelRect;

TEST_SUITE("hislicer") {

TEST_CASE("grid parsing and defaults") {
  CHECK(parse_grid("2x3") == GridSpec{2, 3, 0});
  CHECK(parse_grid("4X1") == GridSpec{4, 1, 0});
  for (const char* bad : {"", "2", "x3", "2x", "0x2", "2x-1", "2x3x4", "a x b"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_grid(bad), ConfigError);
  }
  CHECK(default_grid(2048, 1536) == GridSpec{2, 2, 0});
  CHECK(default_grid(800, 600) == GridSpec{1, 2, 0});
  CHECK(default_grid(600, 800) == GridSpec{2, 1, 0});
  CHECK(default_grid(3000, 1000) == GridSpec{1, 3, 0});
  CHECK(default_grid(4000, 3000, 512) == GridSpec{6, 8, 0});
}

TEST_CASE("worked slices") {
  const TileGrid even = slice(2048, 1536, {2, 2, 0});
  REQUIRE(even.tiles.size() == 4);
  CHECK(even.tiles[0] == PixelRect{0, 0, 1024, 768});
  CHECK(even.tiles[1] == PixelRect{1024, 0, 1024, 768});
  CHECK(even.tiles[2] == PixelRect{0, 768, 1024, 768});
  CHECK(even.tiles[3] == PixelRect{1024, 768, 1024, 768});
  CHECK(&even.tile(1, 0) == &even.tiles[2]);

  const TileGrid odd = slice(5, 5, {2, 2, 0});
  CHECK(odd.tiles[0] == PixelRect{0, 0, 3, 3});
  CHECK(odd.tiles[1] == PixelRect{3, 0, 2, 3});
  CHECK(odd.tiles[3] == PixelRect{3, 3, 2, 2});

  const TileGrid lap = slice(100, 50, {1, 2, 5});
  CHECK(lap.tiles[0] == PixelRect{0, 0, 55, 50});
  CHECK(lap.tiles[1] == PixelRect{45, 0, 55, 50});

  CHECK_THROWS_AS(slice(100, 100, {1, 1, 0}), ValidationError);
  CHECK_THROWS_AS(slice(100, 100, {2, 2, 50}), ValidationError);
  CHECK_THROWS_AS(slice(100, 100, {2, 2, -1}), ValidationError);
  CHECK_THROWS_AS(slice(3, 100, {1, 4, 0}), ValidationError);
  CHECK_THROWS_AS(slice(0, 100, {1, 2, 0}), ValidationError);
}

TEST_CASE("map_back") {
  const TileGrid g = slice(2048, 1536, {2, 2, 0});
  CHECK(map_back(g, 3, BBox{100, 100, 200, 200}) == BBox{1124, 868, 1224, 968});
  CHECK(map_back(g, 0, BBox{1, 2, 3, 4}) == BBox{1, 2, 3, 4});
  const BBox src{1200, 900, 1300, 950};
  const auto& t = g.tile(1, 1);
  CHECK(map_back(g, 3, BBox{src.x1 - t.x, src.y1 - t.y, src.x2 - t.x, src.y2 - t.y}) == src);
  CHECK_THROWS_AS(map_back(g, 4, BBox{0, 0, 1, 1}), ValidationError);
  CHECK_THROWS_AS(map_back(g, 0, BBox{0, 0, 1025, 10}), ValidationError);
  CHECK_THROWS_AS(map_back(g, 0, BBox{-1, 0, 10, 10}), ValidationError);
}

TEST_CASE("random grids: coverage, disjointness and exact round-trip") {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> dim(2, 300);
  for (int c = 0; c < 300; ++c) {
    const int w = dim(rng), h = dim(rng);
    std::size_t rows = std::uniform_int_distribution<std::size_t>(1, std::min(h, 6))(rng);
    std::size_t cols = std::uniform_int_distribution<std::size_t>(1, std::min(w, 6))(rng);
    if (rows * cols < 2) (w >= h ? cols : rows) = 2;
    const int max_overlap = std::min(w / int(cols), h / int(rows)) - 1;
    const int overlap =
        c % 2 == 0 ? 0 : std::uniform_int_distribution<int>(0, std::max(0, max_overlap))(rng);
    CAPTURE(w);
    CAPTURE(h);
    CAPTURE(rows);
    CAPTURE(cols);
    CAPTURE(overlap);
    const TileGrid g = slice(w, h, {rows, cols, overlap});
    REQUIRE(g.tiles.size() == rows * cols);

    std::vector<int> cover(static_cast<std::size_t>(w * h), 0);
    for (const auto& t : g.tiles) {
      REQUIRE(t.x >= 0);
      REQUIRE(t.y >= 0);
      REQUIRE(t.x + t.width <= w);
      REQUIRE(t.y + t.height <= h);
      for (int y = t.y; y < t.y + t.height; ++y) {
        for (int x = t.x; x < t.x + t.width; ++x) ++cover[static_cast<std::size_t>(y * w + x)];
      }
    }
    for (int k : cover) {
      REQUIRE(k >= 1);
      if (overlap == 0) REQUIRE(k == 1);
    }

    // A random integer box inside a random tile survives the round trip.
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, g.tiles.size() - 1)(rng);
    const auto& t = g.tiles[k];
    std::uniform_int_distribution<int> ux(0, t.width), uy(0, t.height);
    int x1 = ux(rng), x2 = ux(rng), y1 = uy(rng), y2 = uy(rng);
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    const BBox src{double(x1 + t.x), double(y1 + t.y), double(x2 + t.x), double(y2 + t.y)};
    REQUIRE(map_back(g, k, BBox{double(x1), double(y1), double(x2), double(y2)}) == src);
  }
}

TEST_CASE("group instance and meta round-trip") {
  TempDir dir("hs");
  image_io::write_solid_image(dir / "big.png", 300, 200, 1, 2, 3);
  const TileGrid g = slice(300, 200, {2, 2, 4});
  const auto paths = write_tiles(dir / "big.png", g, dir / "tiles", "big");
  REQUIRE(paths.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto size = image_io::read_image_size(paths[k]);
    CHECK(size.width == g.tiles[k].width);
    CHECK(size.height == g.tiles[k].height);
  }

  const Instance inst = to_group_instance("v-1", "Where is the kite?", g, paths, "big.png",
                                          BBox{200, 120, 240, 160});
  CHECK(inst.task == TaskKind::group_grounding);
  CHECK(inst.images.size() == 4);
  REQUIRE(inst.ground_truth.size() == 1);
  CHECK(inst.ground_truth[0].image_index == 3);
  const BBox back = map_back(g, 3, inst.ground_truth[0].box);
  CHECK(back == BBox{200, 120, 240, 160});

  save_dataset(dir / "v.jsonl", std::vector<Instance>{inst});
  const auto loaded = load_dataset(dir / "v.jsonl");
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0] == inst);
  const TileGrid rebuilt = grid_from_meta(loaded[0].meta);
  CHECK(rebuilt.tiles == g.tiles);
  CHECK(rebuilt.spec == g.spec);

  // A target straddling tiles goes to the one it overlaps most, clipped.
  const Instance straddle =
      to_group_instance("v-2", "q", g, paths, "big.png", BBox{140, 10, 190, 30});
  CHECK(straddle.ground_truth[0].image_index == 1);
  const Instance blind = to_group_instance("v-3", "q", g, paths, "big.png");
  CHECK(blind.ground_truth.empty());
  CHECK(blind.meta["unlabeled"] == true);
  CHECK_THROWS_AS(grid_from_meta(Json::object()), ValidationError);
}

}

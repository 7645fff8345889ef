// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "migkit/geometry.hpp"

namespace migkit::image_io {

struct ImageSize {
  int width = 0;
  int height = 0;
};

struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const PixelRect&) const = default;
};

/// Decodes the file to learn its dimensions. Throws ValidationError when the
/// file is missing or undecodable.
ImageSize read_image_size(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// MIME type from the file extension; defaults to image/png.
std::string mime_type_for(const std::filesystem::path& path);

/// data: URL carrying the file bytes unchanged.
std::string data_url(const std::filesystem::path& path);

/// data: URL of a PNG copy of the image with a pure-red rectangle outline
/// drawn at `box` (pixel space). The source file is not modified.
std::string data_url_with_box(const std::filesystem::path& path, const BBox& box,
                              int stroke = 4);

/// Writes the `rect` crop of `src` to `dst` (format from dst's extension).
void write_crop(const std::filesystem::path& src, const PixelRect& rect,
                const std::filesystem::path& dst);

/// Writes a solid-colour image; used for fixtures and synthetic data.
void write_solid_image(const std::filesystem::path& dst, int width, int height,
                       std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace migkit::image_io

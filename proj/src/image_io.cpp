// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/image_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "migkit/error.hpp"

namespace migkit::image_io {

namespace {

cv::Mat load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError("image file not found: " + path.string());
  }
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw ValidationError("cannot decode image: " + path.string());
  return img;
}

}  // namespace

ImageSize read_image_size(const std::filesystem::path& path) {
  const cv::Mat img = load(path);
  return {img.cols, img.rows};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_type_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  if (ext == ".gif") return "image/gif";
  return "image/png";
}

std::string data_url(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return "data:" + mime_type_for(path) + ";base64," + base64_encode(bytes);
}

std::string data_url_with_box(const std::filesystem::path& path, const BBox& box,
                              int stroke) {
  cv::Mat img = load(path);
  const cv::Point p1(static_cast<int>(std::lround(box.x1)),
                     static_cast<int>(std::lround(box.y1)));
  const cv::Point p2(static_cast<int>(std::lround(box.x2)),
                     static_cast<int>(std::lround(box.y2)));
  cv::rectangle(img, p1, p2, cv::Scalar(0, 0, 255), stroke);  // BGR red
  std::vector<std::uint8_t> png;
  if (!cv::imencode(".png", img, png)) {
    throw ValidationError("cannot encode marked copy of " + path.string());
  }
  return "data:image/png;base64," + base64_encode(png);
}

void write_crop(const std::filesystem::path& src, const PixelRect& rect,
                const std::filesystem::path& dst) {
  const cv::Mat img = load(src);
  const cv::Rect r(rect.x, rect.y, rect.width, rect.height);
  if (r.x < 0 || r.y < 0 || r.width <= 0 || r.height <= 0 || r.x + r.width > img.cols ||
      r.y + r.height > img.rows) {
    throw ValidationError("crop rectangle outside image " + src.string());
  }
  if (dst.has_parent_path()) std::filesystem::create_directories(dst.parent_path());
  if (!cv::imwrite(dst.string(), img(r))) {
    throw ValidationError("cannot write crop " + dst.string());
  }
}

void write_solid_image(const std::filesystem::path& dst, int width, int height,
                       std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(b, g, r));
  if (dst.has_parent_path()) std::filesystem::create_directories(dst.parent_path());
  if (!cv::imwrite(dst.string(), img)) {
    throw ValidationError("cannot write image " + dst.string());
  }
}

}  // namespace migkit::image_io

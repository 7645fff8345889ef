// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Named-tensor archives and their weighted averaging. Byte layout is
// described in docs/archive_format.md.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace migkit {

using Json = nlohmann::json;

enum class DType { f32, f16 };
std::string_view to_string(DType d);
std::size_t dtype_size(DType d);

struct TensorInfo {
  DType dtype = DType::f32;
  std::vector<std::uint64_t> shape;
  std::uint64_t offset = 0;  // into the payload
  std::uint64_t length = 0;  // bytes

  std::uint64_t elements() const;
  bool operator==(const TensorInfo&) const = default;
};

struct TensorArchive {
  std::map<std::string, TensorInfo> tensors;
  Json metadata = Json::object();  // "__metadata__" in the header
  std::vector<std::uint8_t> payload;

  /// Appends a tensor at the end of the payload.
  void add_f32(const std::string& name, std::vector<std::uint64_t> shape,
               std::span<const float> values);
  void add_f16(const std::string& name, std::vector<std::uint64_t> shape,
               std::span<const std::uint16_t> values);

  std::vector<float> f32(const std::string& name) const;
  std::vector<std::uint16_t> f16(const std::string& name) const;

  /// Tensor names in payload order.
  std::vector<std::string> names_by_offset() const;

  bool operator==(const TensorArchive&) const = default;
};

/// Throws ValidationError unless every length equals elements * dtype size
/// and the tensors tile the payload exactly.
void validate_archive(const TensorArchive& a);

TensorArchive read_archive(const std::filesystem::path& path);
void write_archive(const std::filesystem::path& path, const TensorArchive& a);
std::vector<std::uint8_t> encode_archive(const TensorArchive& a);
TensorArchive decode_archive(std::span<const std::uint8_t> bytes);

/// Weighted elementwise mean with f64 accumulation, cast back to each
/// tensor's dtype. Layout and metadata come from the first archive. Weights
/// default to uniform and must be nonnegative and sum to 1 (within 1e-9).
TensorArchive merge(std::span<const TensorArchive> archives,
                    std::optional<std::vector<double>> weights = std::nullopt);

struct TensorDelta {
  std::string name;
  double max_abs = 0;
  double l2 = 0;
};

struct DiffReport {
  std::vector<TensorDelta> tensors;  // name order
  double max_abs = 0;
  Json to_json() const;
};

/// Throws ValidationError when names, shapes or dtypes differ.
DiffReport diff(const TensorArchive& a, const TensorArchive& b);

}  // namespace migkit

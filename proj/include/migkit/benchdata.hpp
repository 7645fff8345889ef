// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Benchmark instance schema, JSONL persistence and validation.
//
// One instance per line:
//   {"id": "...", "task": "common_object",
//    "images": [{"path": "a.jpg", "width": 640, "height": 480}, ...],
//    "query_text": "...",
//    "query_regions": [{"image": 0, "box": [x1,y1,x2,y2], "space": "pixel"}],
//    "ground_truth":  [{"image": 1, "box": [x1,y1,x2,y2], "space": "norm1000"}],
//    "meta": {...}}
// Image paths are relative to the dataset file unless absolute.

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "migkit/geometry.hpp"
#include "migkit/outparse.hpp"

namespace migkit {

using Json = nlohmann::json;

enum class TaskKind {
  static_difference,
  robust_difference,
  common_object,
  object_tracking,
  multi_view,
  region_locating,
  referring_grounding,
  group_grounding,
  reasoning,
  correspondence,
  freeform,
};

/// The ten benchmark tasks, in report column order.
const std::array<TaskKind, 10>& benchmark_tasks();
std::string_view to_string(TaskKind task);
/// Throws ValidationError on an unknown name.
TaskKind parse_task_kind(std::string_view name);

struct ImageRef {
  std::string path;
  int width = 0;
  int height = 0;

  bool operator==(const ImageRef&) const = default;
};

struct Instance {
  std::string id;
  TaskKind task = TaskKind::freeform;
  std::vector<ImageRef> images;
  std::optional<std::string> query_text;
  std::vector<Region> query_regions;
  std::vector<Region> ground_truth;
  Json meta = Json::object();

  /// Pixel space of image `index` (dimensions from the image record).
  CoordSpace pixel_space(std::size_t index) const;

  bool operator==(const Instance&) const = default;
};

/// Throws ValidationError naming the violated invariant. Instances flagged
/// with meta.unlabeled = true may have an empty ground truth when
/// `allow_unlabeled` is set.
void validate_instance(const Instance& inst, bool allow_unlabeled = false);

Json region_to_json(const Region& r);
Json to_json(const Instance& inst);
/// Image dimensions must already be present in `j`.
Instance instance_from_json(const Json& j);

struct LoadOptions {
  bool check_images = true;      // require image files to exist
  bool allow_unlabeled = false;
  std::filesystem::path image_root;  // empty: the dataset file's directory
};

/// Throws ValidationError "<path>:<line>: <reason>" on the first bad record.
std::vector<Instance> load_dataset(const std::filesystem::path& path,
                                   const LoadOptions& options = {});

void save_dataset(const std::filesystem::path& path, std::span<const Instance> instances);

std::filesystem::path resolve_image_path(const ImageRef& image,
                                         const std::filesystem::path& root);

struct Finding {
  enum class Kind { duplicate_id, zero_area, out_of_bounds, empty_query };
  Kind kind;
  std::string instance_id;
  std::string detail;
};

std::string_view to_string(Finding::Kind kind);

struct ValidationReport {
  std::vector<Finding> findings;
  bool clean() const { return findings.empty(); }
  std::size_t count(Finding::Kind kind) const;
};

/// Automated review pass: duplicate ids, boxes under one pixel of area,
/// boxes exceeding their image, and empty queries.
ValidationReport validate_benchmark(std::span<const Instance> instances);

std::map<TaskKind, std::size_t> task_distribution(std::span<const Instance> instances);

// --- run records -------------------------------------------------------------

enum class Strategy { direct, cot_single, cot_multi };
enum class AnsweringForm { polling, all };

std::string_view to_string(Strategy s);
std::string_view to_string(AnsweringForm f);
Strategy parse_strategy(std::string_view name);
AnsweringForm parse_answering_form(std::string_view name);

/// One request/response exchange with the model.
struct StepRecord {
  std::string step;                       // "direct", "step1", "step2"
  std::vector<std::size_t> images;        // image indices attached
  std::optional<std::size_t> target_image;  // polled image, if any
  ParsedAnswer parsed;                    // parsed.raw is the response text
  double latency_ms = 0;
  bool ok = true;
  std::string error;

  bool operator==(const StepRecord&) const = default;
};

struct RunRecord {
  std::string instance_id;
  Strategy strategy = Strategy::direct;
  AnsweringForm form = AnsweringForm::polling;
  std::vector<StepRecord> steps;
  std::optional<std::string> referring;
  std::optional<std::size_t> selected_image;
  std::vector<Region> predictions;  // boxes attributed to images
  std::vector<double> target_iou;   // per ground-truth target, best IoU
  std::vector<bool> target_hit;     // per ground-truth target, matched
  bool failed = false;
  std::string error;

  bool operator==(const RunRecord&) const = default;
};

Json to_json(const RunRecord& rec, bool with_timing = true);
RunRecord run_record_from_json(const Json& j);

}  // namespace migkit

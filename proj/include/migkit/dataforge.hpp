// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Training-data construction: annotation records, task recipes, region
// filters, adaptive similarity grouping and stage-mix manifests.
//
// AnnotationRecord JSONL, one image per line:
//   {"image": "a.jpg", "width": 640, "height": 480, "source": "objects365",
//    "objects": [{"label": "dog", "box": [x1,y1,x2,y2], "caption": "..."}],
//    "meta": {...}}
// Boxes are pixel coordinates of that image.
//
// EmbeddingIndex JSONL, one image per line:
//   {"path": "a.jpg", "dim": 512, "embedding": [...]}

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "migkit/benchdata.hpp"

namespace migkit {

struct AnnotatedObject {
  std::string label;
  BBox box;  // pixel space
  std::optional<std::string> caption;

  bool operator==(const AnnotatedObject&) const = default;
};

struct AnnotationRecord {
  std::string image;
  int width = 0;
  int height = 0;
  std::vector<AnnotatedObject> objects;
  std::string source;
  Json meta = Json::object();

  bool operator==(const AnnotationRecord&) const = default;
};

/// Throws ValidationError when a box leaves the image or has no area.
void validate_record(const AnnotationRecord& rec);
Json to_json(const AnnotationRecord& rec);
AnnotationRecord annotation_from_json(const Json& j);
/// Throws ValidationError "<path>:<line>: <reason>".
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path, std::span<const AnnotationRecord> recs);

struct SizeRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool operator==(const SizeRange&) const = default;
};

struct RealRange {
  double lo = 0;
  double hi = 0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const RealRange&) const = default;
};

enum class GroupingMode { random, common_object, clip_adaptive };
std::string_view to_string(GroupingMode m);
GroupingMode parse_grouping_mode(std::string_view name);

struct ForgeConfig {
  // common_object
  double common_min_area_ratio = 0.05;
  std::set<std::string> common_exclude = {"keyboard", "knife", "couch", "dining table"};
  SizeRange common_images{2, 5};
  // region_locating: strict "more than" on count and pixels, inclusive ranges
  std::size_t region_min_annotations = 10;
  RealRange region_aspect{0.5, 2.0};
  RealRange region_area_ratio{0.2, 0.49};
  double region_min_pixels = 2000;
  // object_tracking
  SizeRange tracking_frames{4, 6};
  // group_grounding
  SizeRange group_images{3, 5};
  // free-form grouping
  GroupingMode grouping = GroupingMode::clip_adaptive;
  SizeRange adaptive_sample{3, 5};   // images drawn per round besides the anchor
  RealRange adaptive_thres{0.1, 1.0};
  bool adaptive_drop_most_similar = true;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Throws ConfigError for empty or inverted ranges.
  void validate() const;
  Json to_json() const;
  static ForgeConfig from_json(const Json& j);
};

/// Editable label list, one per line; '#' starts a comment.
std::set<std::string> load_label_list(const std::filesystem::path& path);

/// Objects of `rec` that qualify as region-locating targets.
std::vector<AnnotatedObject> filter_regions(const AnnotationRecord& rec, const ForgeConfig& cfg);

// --- embeddings and grouping ---------------------------------------------------

struct EmbeddingIndex {
  std::size_t dim = 0;
  std::vector<std::string> paths;
  std::vector<float> data;  // row-major, paths.size() x dim

  std::size_t size() const { return paths.size(); }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

inline constexpr double kUnitNormTolerance = 1e-4;

/// Checks the declared dimension of every record and unit norms within
/// kUnitNormTolerance. Throws ValidationError naming the line.
EmbeddingIndex load_embedding_index(const std::filesystem::path& path);
void validate_embedding_index(const EmbeddingIndex& index);
void save_embedding_index(const std::filesystem::path& path, const EmbeddingIndex& index);

/// Candidate count for one round: floor(thres * n_sorted), raised to
/// min(r, n_sorted) so a round can always draw r images when that many remain.
std::size_t adaptive_candidate_count(double thres, std::size_t n_sorted, std::size_t r);

/// Adaptive similarity grouping. Each round takes the first remaining image
/// as anchor, ranks the others by cosine similarity, keeps the top
/// candidates and samples r of them. When no more than r + 1 images remain
/// they form the final group. Returns index groups partitioning the index.
/// Deterministic in cfg.seed for any cfg.workers.
std::vector<std::vector<std::size_t>> adaptive_groups(const EmbeddingIndex& index,
                                                      const ForgeConfig& cfg);

/// Seeded random partition into groups of cfg.group_images sizes.
std::vector<std::vector<std::size_t>> random_groups(std::size_t n, SizeRange sizes,
                                                    std::uint64_t seed);

/// Evenly spaced frame indices including the first and last frame.
std::vector<std::size_t> tracking_frame_indices(std::size_t frames, std::size_t n);

// --- task recipes ----------------------------------------------------------------

struct TrainInstance {
  Instance instance;
  std::string answer;  // box tokens in norm1000, "Image-k: <|box_start|>...<|box_end|>"

  bool operator==(const TrainInstance&) const = default;
};

Json to_json(const TrainInstance& t);
TrainInstance train_instance_from_json(const Json& j);
void save_train_instances(const std::filesystem::path& path, std::span<const TrainInstance> v);
std::vector<TrainInstance> load_train_instances(const std::filesystem::path& path);

/// Answer text for ground-truth regions: one "Image-k: <box token>" line each.
std::string render_answer(const Instance& inst);

struct ForgeLog {
  std::map<std::string, std::size_t> counters;
  std::vector<std::string> messages;

  void count(const std::string& key, std::size_t n = 1) { counters[key] += n; }
  Json to_json() const;
};

struct ForgeContext {
  std::filesystem::path image_root;  // resolves record image paths
  std::filesystem::path out_dir;     // receives generated crops
};

/// Builds training instances for one task. Records missing what the recipe
/// needs are skipped and logged. Throws ConfigError for tasks without a
/// recipe (multi_view, reasoning, correspondence, freeform).
std::vector<TrainInstance> make_task_set(std::span<const AnnotationRecord> records,
                                         TaskKind task, const ForgeConfig& cfg,
                                         const ForgeContext& ctx, ForgeLog* log = nullptr);

// --- stage manifests ---------------------------------------------------------------

struct MixShare {
  std::string type;    // data type row
  std::string source;  // key into the available sets
  double percent;
};

/// The published mix for stage 1 or 2. Throws ConfigError otherwise.
const std::vector<MixShare>& stage_mix(int stage);

struct SourceSet {
  std::size_t size = 0;
  std::vector<std::string> ids;  // optional; sampled when present
};

struct ManifestEntry {
  MixShare share;
  std::size_t count = 0;
  std::vector<std::string> ids;  // sampled ids (empty when the source had none)
};

struct Manifest {
  int stage = 0;
  std::size_t total = 0;
  std::vector<ManifestEntry> entries;
  Json to_json() const;
};

/// Largest-remainder apportionment of `total` over the stage mix, with
/// seeded sampling of record ids (cycling through a shuffled source when it
/// is smaller than its share). Throws ConfigError when a required source is
/// absent.
Manifest stage_manifest(int stage, std::size_t total,
                        const std::map<std::string, SourceSet>& available, std::uint64_t seed);

}  // namespace migkit

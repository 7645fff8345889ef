// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/benchdata.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "migkit/error.hpp"
#include "migkit/image_io.hpp"

namespace migkit {

namespace {

constexpr std::array<std::pair<TaskKind, std::string_view>, 11> kTaskNames = {{
    {TaskKind::static_difference, "static_difference"},
    {TaskKind::robust_difference, "robust_difference"},
    {TaskKind::common_object, "common_object"},
    {TaskKind::object_tracking, "object_tracking"},
    {TaskKind::multi_view, "multi_view"},
    {TaskKind::region_locating, "region_locating"},
    {TaskKind::referring_grounding, "referring_grounding"},
    {TaskKind::group_grounding, "group_grounding"},
    {TaskKind::reasoning, "reasoning"},
    {TaskKind::correspondence, "correspondence"},
    {TaskKind::freeform, "freeform"},
}};

Json box_to_json(const BBox& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

BBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw ValidationError("box must be an array of 4 numbers");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError("box must be an array of 4 numbers");
  }
  return BBox::checked(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>());
}

struct RawRegion {
  std::size_t image;
  BBox box;
  SpaceKind space;
};

RawRegion raw_region_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("region must be an object");
  if (!j.contains("image") || !j["image"].is_number_unsigned()) {
    throw ValidationError("region.image must be a non-negative integer");
  }
  if (!j.contains("space") || !j["space"].is_string()) {
    throw ValidationError("region.space must be \"pixel\" or \"norm1000\"");
  }
  return {j["image"].get<std::size_t>(), box_from_json(j.at("box")),
          parse_space_kind(j["space"].get<std::string>())};
}

std::vector<Region> regions_from_json(const Json& arr, const Instance& inst,
                                      const char* field) {
  std::vector<Region> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) throw ValidationError(std::string(field) + " must be an array");
  for (const auto& rj : arr) {
    const RawRegion raw = raw_region_from_json(rj);
    if (raw.image >= inst.images.size()) {
      throw ValidationError(std::string(field) + ": image index " +
                            std::to_string(raw.image) + " out of range for " +
                            std::to_string(inst.images.size()) + " images");
    }
    CoordSpace space = raw.space == SpaceKind::pixel ? inst.pixel_space(raw.image)
                                                     : CoordSpace::norm1000();
    out.push_back({raw.image, raw.box, space});
  }
  return out;
}

void check_regions(const Instance& inst, const std::vector<Region>& regions,
                   const char* field) {
  for (const Region& r : regions) {
    if (r.image_index >= inst.images.size()) {
      throw ValidationError(std::string(field) + ": image index " +
                            std::to_string(r.image_index) + " out of range for " +
                            std::to_string(inst.images.size()) + " images");
    }
    if (!r.box.is_canonical()) {
      throw ValidationError(std::string(field) + ": box is not canonical");
    }
  }
}

Json parsed_to_json(const ParsedAnswer& p) {
  Json boxes = Json::array();
  for (const auto& b : p.boxes) {
    Json jb{{"box", box_to_json(b.box)}};
    jb["image"] = b.image_index ? Json(*b.image_index) : Json(nullptr);
    boxes.push_back(std::move(jb));
  }
  Json j{{"boxes", boxes}, {"flags", p.flags.names()}, {"tier", p.tier}};
  if (p.referring_text) j["referring_text"] = *p.referring_text;
  return j;
}

ParsedAnswer parsed_from_json(const Json& j, std::string raw) {
  ParsedAnswer p;
  p.raw = std::move(raw);
  for (const auto& jb : j.at("boxes")) {
    ParsedBox b;
    b.box = box_from_json(jb.at("box"));
    if (!jb.at("image").is_null()) b.image_index = jb["image"].get<std::size_t>();
    p.boxes.push_back(b);
  }
  p.flags = ParseFlags::from_names(j.at("flags").get<std::vector<std::string>>());
  p.tier = j.at("tier").get<int>();
  if (j.contains("referring_text")) p.referring_text = j["referring_text"].get<std::string>();
  return p;
}

// Prediction regions carry their own space; pixel dimensions are stored
// explicitly because no instance is at hand when reading a journal.
Json prediction_to_json(const Region& r) {
  Json j{{"image", r.image_index},
         {"box", box_to_json(r.box)},
         {"space", std::string(to_string(r.space.kind))}};
  if (r.space.kind == SpaceKind::pixel) {
    j["width"] = r.space.width;
    j["height"] = r.space.height;
  }
  return j;
}

Region prediction_from_json(const Json& j) {
  const RawRegion raw = raw_region_from_json(j);
  CoordSpace space = raw.space == SpaceKind::pixel
                         ? CoordSpace::pixel(j.at("width").get<int>(), j.at("height").get<int>())
                         : CoordSpace::norm1000();
  return {raw.image, raw.box, space};
}

}  // namespace

const std::array<TaskKind, 10>& benchmark_tasks() {
  static const std::array<TaskKind, 10> tasks = {
      TaskKind::static_difference, TaskKind::robust_difference,
      TaskKind::common_object,     TaskKind::object_tracking,
      TaskKind::multi_view,        TaskKind::region_locating,
      TaskKind::referring_grounding, TaskKind::group_grounding,
      TaskKind::reasoning,         TaskKind::correspondence,
  };
  return tasks;
}

std::string_view to_string(TaskKind task) {
  for (const auto& [k, name] : kTaskNames) {
    if (k == task) return name;
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  for (const auto& [k, n] : kTaskNames) {
    if (n == name) return k;
  }
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

CoordSpace Instance::pixel_space(std::size_t index) const {
  const ImageRef& img = images.at(index);
  return CoordSpace::pixel(img.width, img.height);
}

void validate_instance(const Instance& inst, bool allow_unlabeled) {
  if (inst.id.empty()) throw ValidationError("id must be non-empty");
  if (inst.images.empty()) throw ValidationError("images must be non-empty");
  for (const ImageRef& img : inst.images) {
    if (img.path.empty()) throw ValidationError("image path must be non-empty");
    if (img.width < 1 || img.height < 1) {
      throw ValidationError("image '" + img.path + "' needs width and height >= 1");
    }
  }
  const bool unlabeled =
      allow_unlabeled && inst.meta.is_object() && inst.meta.value("unlabeled", false);
  if (inst.ground_truth.empty() && !unlabeled) {
    throw ValidationError("ground_truth must be non-empty");
  }
  if (!inst.query_text && inst.query_regions.empty()) {
    throw ValidationError("query_text and query_regions are both absent");
  }
  check_regions(inst, inst.query_regions, "query_regions");
  check_regions(inst, inst.ground_truth, "ground_truth");
}

Json region_to_json(const Region& r) {
  return Json{{"image", r.image_index},
              {"box", box_to_json(r.box)},
              {"space", std::string(to_string(r.space.kind))}};
}

Json to_json(const Instance& inst) {
  Json images = Json::array();
  for (const ImageRef& img : inst.images) {
    images.push_back({{"path", img.path}, {"width", img.width}, {"height", img.height}});
  }
  Json qr = Json::array();
  for (const Region& r : inst.query_regions) qr.push_back(region_to_json(r));
  Json gt = Json::array();
  for (const Region& r : inst.ground_truth) gt.push_back(region_to_json(r));
  Json j{{"id", inst.id},
         {"task", std::string(to_string(inst.task))},
         {"images", images},
         {"query_regions", qr},
         {"ground_truth", gt},
         {"meta", inst.meta}};
  j["query_text"] = inst.query_text ? Json(*inst.query_text) : Json(nullptr);
  return j;
}

Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  Instance inst;
  if (!j.contains("id") || !j["id"].is_string()) throw ValidationError("id must be a string");
  inst.id = j["id"].get<std::string>();
  if (!j.contains("task") || !j["task"].is_string()) {
    throw ValidationError("task must be a string");
  }
  inst.task = parse_task_kind(j["task"].get<std::string>());
  if (!j.contains("images") || !j["images"].is_array()) {
    throw ValidationError("images must be an array");
  }
  for (const auto& ij : j["images"]) {
    if (!ij.is_object() || !ij.contains("path") || !ij["path"].is_string()) {
      throw ValidationError("image entries need a string path");
    }
    ImageRef img{ij["path"].get<std::string>(), ij.value("width", 0), ij.value("height", 0)};
    inst.images.push_back(std::move(img));
  }
  if (j.contains("query_text") && !j["query_text"].is_null()) {
    if (!j["query_text"].is_string()) throw ValidationError("query_text must be a string");
    inst.query_text = j["query_text"].get<std::string>();
  }
  inst.query_regions =
      regions_from_json(j.value("query_regions", Json(nullptr)), inst, "query_regions");
  inst.ground_truth =
      regions_from_json(j.value("ground_truth", Json(nullptr)), inst, "ground_truth");
  if (j.contains("meta") && !j["meta"].is_null()) {
    if (!j["meta"].is_object()) throw ValidationError("meta must be an object");
    inst.meta = j["meta"];
  }
  return inst;
}

std::filesystem::path resolve_image_path(const ImageRef& image,
                                         const std::filesystem::path& root) {
  std::filesystem::path p(image.path);
  return p.is_absolute() || root.empty() ? p : root / p;
}

std::vector<Instance> load_dataset(const std::filesystem::path& path,
                                   const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  const std::filesystem::path root =
      options.image_root.empty() ? path.parent_path() : options.image_root;

  std::vector<Instance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      Json j = Json::parse(line);
      // Fill missing dimensions from the image headers before regions are
      // resolved against them.
      if (j.is_object() && j.contains("images") && j["images"].is_array()) {
        for (auto& ij : j["images"]) {
          if (!ij.is_object() || !ij.contains("path") || !ij["path"].is_string()) continue;
          const auto file = resolve_image_path({ij["path"].get<std::string>()}, root);
          if (options.check_images && !std::filesystem::exists(file)) {
            throw ValidationError("missing image file " + file.string());
          }
          if (!ij.contains("width") || !ij.contains("height")) {
            const auto size = image_io::read_image_size(file);
            ij["width"] = size.width;
            ij["height"] = size.height;
          }
        }
      }
      Instance inst = instance_from_json(j);
      validate_instance(inst, options.allow_unlabeled);
      out.push_back(std::move(inst));
    } catch (const Json::exception& e) {
      throw ValidationError(where + "malformed JSON: " + e.what());
    } catch (const Error& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const Instance> instances) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write dataset " + path.string());
  for (const Instance& inst : instances) out << to_json(inst).dump() << '\n';
}

std::string_view to_string(Finding::Kind kind) {
  switch (kind) {
    case Finding::Kind::duplicate_id:
      return "duplicate_id";
    case Finding::Kind::zero_area:
      return "zero_area";
    case Finding::Kind::out_of_bounds:
      return "out_of_bounds";
    case Finding::Kind::empty_query:
      return "empty_query";
  }
  return "unknown";
}

std::size_t ValidationReport::count(Finding::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      findings.begin(), findings.end(), [&](const Finding& f) { return f.kind == kind; }));
}

ValidationReport validate_benchmark(std::span<const Instance> instances) {
  ValidationReport report;
  std::set<std::string> seen;
  std::set<std::string> reported;
  for (const Instance& inst : instances) {
    if (!seen.insert(inst.id).second && reported.insert(inst.id).second) {
      report.findings.push_back({Finding::Kind::duplicate_id, inst.id, "id appears more than once"});
    }

    const bool no_text = !inst.query_text ||
                         inst.query_text->find_first_not_of(" \t\r\n") == std::string::npos;
    if (no_text && inst.query_regions.empty()) {
      report.findings.push_back({Finding::Kind::empty_query, inst.id, "query is empty"});
    }

    auto check = [&](const Region& r, const char* field, std::size_t idx) {
      if (r.image_index >= inst.images.size()) return;
      const ImageRef& img = inst.images[r.image_index];
      if (img.width < 1 || img.height < 1) return;
      const CoordSpace px = CoordSpace::pixel(img.width, img.height);
      const BBox pb = convert(r.box, r.space, px);
      const std::string where = std::string(field) + "[" + std::to_string(idx) + "]";
      if (pb.area() < 1.0) {
        report.findings.push_back(
            {Finding::Kind::zero_area, inst.id, where + " has area below one pixel"});
      }
      const bool outside =
          r.space.kind == SpaceKind::pixel
              ? (r.box.x1 < 0 || r.box.y1 < 0 || r.box.x2 > img.width || r.box.y2 > img.height)
              : (r.box.x1 < 0 || r.box.y1 < 0 || r.box.x2 > kNorm1000Max ||
                 r.box.y2 > kNorm1000Max);
      if (outside) {
        report.findings.push_back(
            {Finding::Kind::out_of_bounds, inst.id, where + " exceeds image bounds"});
      }
    };
    for (std::size_t i = 0; i < inst.query_regions.size(); ++i) {
      check(inst.query_regions[i], "query_regions", i);
    }
    for (std::size_t i = 0; i < inst.ground_truth.size(); ++i) {
      check(inst.ground_truth[i], "ground_truth", i);
    }
  }
  return report;
}

std::map<TaskKind, std::size_t> task_distribution(std::span<const Instance> instances) {
  std::map<TaskKind, std::size_t> counts;
  for (const Instance& inst : instances) ++counts[inst.task];
  return counts;
}

// --- run records -------------------------------------------------------------

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::direct:
      return "direct";
    case Strategy::cot_single:
      return "cot_single";
    case Strategy::cot_multi:
      return "cot_multi";
  }
  return "unknown";
}

std::string_view to_string(AnsweringForm f) {
  return f == AnsweringForm::polling ? "polling" : "all";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "direct") return Strategy::direct;
  if (name == "cot_single") return Strategy::cot_single;
  if (name == "cot_multi") return Strategy::cot_multi;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

AnsweringForm parse_answering_form(std::string_view name) {
  if (name == "polling") return AnsweringForm::polling;
  if (name == "all") return AnsweringForm::all;
  throw ConfigError("unknown answering form '" + std::string(name) + "'");
}

Json to_json(const RunRecord& rec, bool with_timing) {
  Json steps = Json::array();
  for (const StepRecord& s : rec.steps) {
    Json js{{"step", s.step},
            {"images", s.images},
            {"raw", s.parsed.raw},
            {"parsed", parsed_to_json(s.parsed)},
            {"ok", s.ok}};
    js["target_image"] = s.target_image ? Json(*s.target_image) : Json(nullptr);
    if (!s.error.empty()) js["error"] = s.error;
    if (with_timing) js["latency_ms"] = s.latency_ms;
    steps.push_back(std::move(js));
  }
  Json preds = Json::array();
  for (const Region& r : rec.predictions) preds.push_back(prediction_to_json(r));
  Json j{{"instance_id", rec.instance_id},
         {"strategy", std::string(to_string(rec.strategy))},
         {"form", std::string(to_string(rec.form))},
         {"steps", steps},
         {"predictions", preds},
         {"target_iou", rec.target_iou},
         {"target_hit", rec.target_hit},
         {"failed", rec.failed}};
  j["referring"] = rec.referring ? Json(*rec.referring) : Json(nullptr);
  j["selected_image"] = rec.selected_image ? Json(*rec.selected_image) : Json(nullptr);
  if (!rec.error.empty()) j["error"] = rec.error;
  return j;
}

RunRecord run_record_from_json(const Json& j) {
  RunRecord rec;
  rec.instance_id = j.at("instance_id").get<std::string>();
  rec.strategy = parse_strategy(j.at("strategy").get<std::string>());
  rec.form = parse_answering_form(j.at("form").get<std::string>());
  for (const auto& js : j.at("steps")) {
    StepRecord s;
    s.step = js.at("step").get<std::string>();
    s.images = js.at("images").get<std::vector<std::size_t>>();
    if (!js.at("target_image").is_null()) s.target_image = js["target_image"].get<std::size_t>();
    s.parsed = parsed_from_json(js.at("parsed"), js.at("raw").get<std::string>());
    s.ok = js.at("ok").get<bool>();
    s.error = js.value("error", std::string());
    s.latency_ms = js.value("latency_ms", 0.0);
    rec.steps.push_back(std::move(s));
  }
  for (const auto& p : j.at("predictions")) rec.predictions.push_back(prediction_from_json(p));
  rec.target_iou = j.at("target_iou").get<std::vector<double>>();
  rec.target_hit = j.at("target_hit").get<std::vector<bool>>();
  rec.failed = j.at("failed").get<bool>();
  if (!j.at("referring").is_null()) rec.referring = j["referring"].get<std::string>();
  if (!j.at("selected_image").is_null()) rec.selected_image = j["selected_image"].get<std::size_t>();
  rec.error = j.value("error", std::string());
  return rec;
}

}  // namespace migkit

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/dataforge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "migkit/error.hpp"
#include "migkit/image_io.hpp"
#include "migkit/kernels/kernels.hpp"
#include "migkit/parallel.hpp"
#include "migkit/prompts.hpp"

namespace migkit {

namespace {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_a),
                    static_cast<std::uint32_t>(stream_a >> 32),
                    static_cast<std::uint32_t>(stream_b)};
  return Rng(seq);
}

std::size_t draw(Rng& rng, SizeRange r) {
  return std::uniform_int_distribution<std::size_t>(r.lo, r.hi)(rng);
}

// Consecutive chunks with sizes drawn from `sizes`; a tail that could not
// reach sizes.lo on its own is folded into the previous chunk when that
// stays within sizes.hi, otherwise it is returned as a short final chunk.
std::vector<std::vector<std::size_t>> chunk(const std::vector<std::size_t>& items,
                                            SizeRange sizes, Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t pos = 0;
  while (pos < items.size()) {
    const std::size_t rem = items.size() - pos;
    std::size_t n = std::min(draw(rng, sizes), rem);
    if (rem - n < sizes.lo && rem <= sizes.hi) n = rem;
    out.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(pos),
                     items.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  }
  return out;
}

BBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ValidationError("box must be [x1,y1,x2,y2]");
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError("box coordinates must be numbers");
  }
  return BBox::checked(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>());
}

Json box_to_json(const BBox& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

ImageRef image_ref(const std::string& path, int w, int h, const ForgeContext& ctx) {
  return ImageRef{resolve_image_path({path, w, h}, ctx.image_root).string(), w, h};
}

Region pixel_region(std::size_t image, const BBox& box, int w, int h) {
  return Region{image, box, CoordSpace::pixel(w, h)};
}

double area_ratio(const AnnotatedObject& o, const AnnotationRecord& r) {
  return o.box.area() / (static_cast<double>(r.width) * static_cast<double>(r.height));
}

std::string make_id(TaskKind task, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%06zu", n);
  return std::string(to_string(task)) + buf;
}

void note(ForgeLog* log, const std::string& key, const std::string& msg = {}) {
  if (log == nullptr) return;
  log->count(key);
  if (!msg.empty()) log->messages.push_back(msg);
}

TrainInstance finish(Instance inst) {
  validate_instance(inst);
  TrainInstance t{std::move(inst), {}};
  t.answer = render_answer(t.instance);
  return t;
}

// --- recipes -----------------------------------------------------------------

std::vector<TrainInstance> make_difference(std::span<const AnnotationRecord> recs, TaskKind task,
                                           const ForgeContext& ctx, ForgeLog* log) {
  std::vector<TrainInstance> out;
  for (const auto& rec : recs) {
    const Json pair = rec.meta.value("pair_image", Json());
    if (!pair.is_object() || !pair.contains("path") || !pair.contains("width") ||
        !pair.contains("height")) {
      note(log, "skipped_no_pair", rec.image + ": no meta.pair_image {path,width,height}");
      continue;
    }
    if (rec.objects.empty()) {
      note(log, "skipped_no_change", rec.image + ": no annotated change");
      continue;
    }
    const int pw = pair["width"].get<int>();
    const int ph = pair["height"].get<int>();
    Instance inst;
    inst.id = make_id(task, out.size());
    inst.task = task;
    inst.images = {image_ref(rec.image, rec.width, rec.height, ctx),
                   image_ref(pair["path"].get<std::string>(), pw, ph, ctx)};
    inst.query_text = default_question(task);
    for (const auto& o : rec.objects) inst.ground_truth.push_back(pixel_region(1, o.box, pw, ph));
    inst.meta = {{"source", rec.source}};
    out.push_back(finish(std::move(inst)));
  }
  return out;
}

std::vector<TrainInstance> make_common_object(std::span<const AnnotationRecord> recs,
                                              const ForgeConfig& cfg, const ForgeContext& ctx,
                                              ForgeLog* log) {
  // Qualifying labels per record: large enough, not excluded.
  std::vector<std::map<std::string, std::vector<std::size_t>>> qual(recs.size());
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t o = 0; o < recs[i].objects.size(); ++o) {
      const auto& obj = recs[i].objects[o];
      if (cfg.common_exclude.contains(obj.label)) continue;
      if (area_ratio(obj, recs[i]) < cfg.common_min_area_ratio) continue;
      qual[i][obj.label].push_back(o);
    }
    for (const auto& [label, objs] : qual[i]) {
      if (objs.size() == 1) by_label[label].push_back(i);
    }
  }

  std::vector<TrainInstance> out;
  std::vector<bool> used(recs.size(), false);
  std::size_t label_no = 0;
  for (const auto& [label, members] : by_label) {
    Rng rng = make_rng(cfg.seed, 0x636f6d6d, label_no++);
    std::vector<std::size_t> pool;
    for (std::size_t i : members) {
      if (!used[i]) pool.push_back(i);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (const auto& group : chunk(pool, cfg.common_images, rng)) {
      if (group.size() < cfg.common_images.lo) continue;
      std::set<std::string> shared;
      for (const auto& [l, _] : qual[group[0]]) shared.insert(l);
      for (std::size_t g = 1; g < group.size(); ++g) {
        std::set<std::string> next;
        for (const auto& l : shared) {
          if (qual[group[g]].contains(l)) next.insert(l);
        }
        shared = std::move(next);
      }
      if (shared.size() != 1) {
        note(log, "skipped_ambiguous_group", "common label '" + label + "': group shares " +
                                                 std::to_string(shared.size()) + " labels");
        continue;
      }
      Instance inst;
      inst.id = make_id(TaskKind::common_object, out.size());
      inst.task = TaskKind::common_object;
      inst.query_text = default_question(TaskKind::common_object);
      for (std::size_t g = 0; g < group.size(); ++g) {
        const auto& rec = recs[group[g]];
        inst.images.push_back(image_ref(rec.image, rec.width, rec.height, ctx));
        const auto& obj = rec.objects[qual[group[g]].at(label).front()];
        inst.ground_truth.push_back(pixel_region(g, obj.box, rec.width, rec.height));
        used[group[g]] = true;
      }
      inst.meta = {{"label", label}};
      out.push_back(finish(std::move(inst)));
    }
  }
  return out;
}

std::vector<TrainInstance> make_tracking(std::span<const AnnotationRecord> recs,
                                         const ForgeConfig& cfg, const ForgeContext& ctx,
                                         ForgeLog* log) {
  std::map<std::string, std::vector<std::pair<long long, std::size_t>>> seqs;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const Json& m = recs[i].meta;
    if (!m.contains("sequence") || !m.contains("frame") || !m["frame"].is_number_integer()) {
      note(log, "skipped_no_sequence", recs[i].image + ": no meta.sequence/meta.frame");
      continue;
    }
    const std::string seq =
        m["sequence"].is_string() ? m["sequence"].get<std::string>() : m["sequence"].dump();
    seqs[seq].emplace_back(m["frame"].get<long long>(), i);
  }

  const auto target_of = [](const AnnotationRecord& r,
                            const std::string& label) -> const AnnotatedObject* {
    for (const auto& o : r.objects) {
      if (label.empty() || o.label == label) return &o;
    }
    return nullptr;
  };

  std::vector<TrainInstance> out;
  std::size_t seq_no = 0;
  for (auto& [seq, frames] : seqs) {
    std::sort(frames.begin(), frames.end());
    Rng rng = make_rng(cfg.seed, 0x7472616b, seq_no++);
    if (frames.size() < cfg.tracking_frames.lo) {
      note(log, "skipped_short_sequence", "sequence " + seq + " has " +
                                              std::to_string(frames.size()) + " frames");
      continue;
    }
    const std::size_t n = std::min(draw(rng, cfg.tracking_frames), frames.size());
    const auto idx = tracking_frame_indices(frames.size(), n);
    const AnnotationRecord& first = recs[frames[idx[0]].second];
    const std::string label = first.meta.value("target", std::string());
    const AnnotatedObject* q = target_of(first, label);
    if (q == nullptr) {
      note(log, "skipped_no_target", "sequence " + seq + ": no target in the first frame");
      continue;
    }
    Instance inst;
    inst.id = make_id(TaskKind::object_tracking, out.size());
    inst.task = TaskKind::object_tracking;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& rec = recs[frames[idx[k]].second];
      inst.images.push_back(image_ref(rec.image, rec.width, rec.height, ctx));
      if (k == 0) continue;
      if (const AnnotatedObject* t = target_of(rec, q->label)) {
        inst.ground_truth.push_back(pixel_region(k, t->box, rec.width, rec.height));
      }
    }
    if (inst.ground_truth.empty()) {
      note(log, "skipped_no_target", "sequence " + seq + ": target absent after frame 1");
      continue;
    }
    inst.query_regions = {pixel_region(0, q->box, first.width, first.height)};
    Json frame_ids = Json::array();
    for (std::size_t k : idx) frame_ids.push_back(frames[k].first);
    inst.meta = {{"sequence", seq}, {"frames", frame_ids}};
    out.push_back(finish(std::move(inst)));
  }
  return out;
}

std::vector<TrainInstance> make_group_grounding(std::span<const AnnotationRecord> recs,
                                                const ForgeConfig& cfg,
                                                const ForgeContext& ctx, ForgeLog* log) {
  std::vector<TrainInstance> out;
  Rng rng = make_rng(cfg.seed, 0x67726f75);
  const auto groups = random_groups(recs.size(), cfg.group_images, cfg.seed);
  for (const auto& group : groups) {
    if (group.size() < cfg.group_images.lo) continue;
    std::vector<std::size_t> with_objects;
    for (std::size_t g = 0; g < group.size(); ++g) {
      if (!recs[group[g]].objects.empty()) with_objects.push_back(g);
    }
    if (with_objects.empty()) {
      note(log, "skipped_no_objects", "group without annotated objects");
      continue;
    }
    const std::size_t tg = with_objects[std::uniform_int_distribution<std::size_t>(
        0, with_objects.size() - 1)(rng)];
    const auto& trec = recs[group[tg]];
    // Prefer an object that comes with a referring caption.
    const AnnotatedObject* obj = &trec.objects.front();
    for (const auto& o : trec.objects) {
      if (o.caption && !o.caption->empty()) {
        obj = &o;
        break;
      }
    }
    Instance inst;
    inst.id = make_id(TaskKind::group_grounding, out.size());
    inst.task = TaskKind::group_grounding;
    for (std::size_t i : group) {
      inst.images.push_back(image_ref(recs[i].image, recs[i].width, recs[i].height, ctx));
    }
    inst.query_text = obj->caption && !obj->caption->empty() ? *obj->caption : obj->label;
    inst.ground_truth = {pixel_region(tg, obj->box, trec.width, trec.height)};
    out.push_back(finish(std::move(inst)));
  }
  return out;
}

std::vector<TrainInstance> make_region_locating(std::span<const AnnotationRecord> recs,
                                                const ForgeConfig& cfg,
                                                const ForgeContext& ctx, ForgeLog* log) {
  if (ctx.out_dir.empty()) throw ConfigError("region_locating needs an output directory for crops");
  const auto crop_dir = ctx.out_dir / "crops";
  std::filesystem::create_directories(crop_dir);
  std::vector<TrainInstance> out;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    const auto regions = filter_regions(rec, cfg);
    if (regions.empty()) {
      note(log, "skipped_no_region");
      continue;
    }
    const auto src = resolve_image_path({rec.image, rec.width, rec.height}, ctx.image_root);
    for (std::size_t k = 0; k < regions.size(); ++k) {
      const BBox& b = regions[k].box;
      image_io::PixelRect rect;
      rect.x = static_cast<int>(std::floor(b.x1));
      rect.y = static_cast<int>(std::floor(b.y1));
      rect.width = std::min(static_cast<int>(std::ceil(b.x2)), rec.width) - rect.x;
      rect.height = std::min(static_cast<int>(std::ceil(b.y2)), rec.height) - rect.y;
      char name[64];
      std::snprintf(name, sizeof name, "r%06zu_%02zu.png", i, k);
      const auto crop = crop_dir / name;
      try {
        image_io::write_crop(src, rect, crop);
      } catch (const Error& e) {
        note(log, "skipped_crop_failed", e.what());
        continue;
      }
      Instance inst;
      inst.id = make_id(TaskKind::region_locating, out.size());
      inst.task = TaskKind::region_locating;
      inst.images = {image_ref(rec.image, rec.width, rec.height, ctx),
                     ImageRef{crop.string(), rect.width, rect.height}};
      inst.query_regions = {pixel_region(
          1, BBox{0, 0, static_cast<double>(rect.width), static_cast<double>(rect.height)},
          rect.width, rect.height)};
      inst.ground_truth = {pixel_region(0, b, rec.width, rec.height)};
      inst.meta = {{"label", regions[k].label}, {"reference_images", Json::array({1})}};
      out.push_back(finish(std::move(inst)));
    }
  }
  return out;
}

std::vector<TrainInstance> make_referring(std::span<const AnnotationRecord> recs,
                                          const ForgeConfig& cfg, const ForgeContext& ctx,
                                          ForgeLog* log) {
  // Each record's primary label is its largest object.
  std::map<std::string, std::vector<std::size_t>> by_label;
  std::vector<const AnnotatedObject*> primary(recs.size(), nullptr);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (const auto& o : recs[i].objects) {
      if (primary[i] == nullptr || o.box.area() > primary[i]->box.area()) primary[i] = &o;
    }
    if (primary[i] == nullptr) {
      note(log, "skipped_no_objects");
      continue;
    }
    by_label[primary[i]->label].push_back(i);
  }
  std::vector<TrainInstance> out;
  std::size_t label_no = 0;
  for (auto& [label, members] : by_label) {
    Rng rng = make_rng(cfg.seed, 0x72656665, label_no++);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t p = 0; p + 1 < members.size(); p += 2) {
      const auto& src = recs[members[p]];
      const auto& dst = recs[members[p + 1]];
      const AnnotatedObject* target = nullptr;
      std::size_t matches = 0;
      for (const auto& o : dst.objects) {
        if (o.label == label) {
          target = &o;
          ++matches;
        }
      }
      if (matches != 1) {
        note(log, "skipped_ambiguous_target", dst.image + ": " + std::to_string(matches) +
                                                  " objects labelled '" + label + "'");
        continue;
      }
      Instance inst;
      inst.id = make_id(TaskKind::referring_grounding, out.size());
      inst.task = TaskKind::referring_grounding;
      inst.images = {image_ref(src.image, src.width, src.height, ctx),
                     image_ref(dst.image, dst.width, dst.height, ctx)};
      inst.query_regions = {pixel_region(0, primary[members[p]]->box, src.width, src.height)};
      inst.ground_truth = {pixel_region(1, target->box, dst.width, dst.height)};
      inst.meta = {{"label", label}};
      out.push_back(finish(std::move(inst)));
    }
  }
  return out;
}

}  // namespace

// --- records -----------------------------------------------------------------

void validate_record(const AnnotationRecord& rec) {
  if (rec.image.empty()) throw ValidationError("record has no image path");
  if (rec.width < 1 || rec.height < 1) throw ValidationError(rec.image + ": bad image size");
  for (const auto& o : rec.objects) {
    if (!o.box.is_canonical() || !(o.box.area() > 0)) {
      throw ValidationError(rec.image + ": object '" + o.label + "' has no area");
    }
    if (o.box.x1 < 0 || o.box.y1 < 0 || o.box.x2 > rec.width || o.box.y2 > rec.height) {
      throw ValidationError(rec.image + ": object '" + o.label + "' leaves the image");
    }
  }
}

Json to_json(const AnnotationRecord& rec) {
  Json objs = Json::array();
  for (const auto& o : rec.objects) {
    Json j{{"label", o.label}, {"box", box_to_json(o.box)}};
    if (o.caption) j["caption"] = *o.caption;
    objs.push_back(std::move(j));
  }
  return Json{{"image", rec.image}, {"width", rec.width},     {"height", rec.height},
              {"source", rec.source}, {"objects", objs}, {"meta", rec.meta}};
}

AnnotationRecord annotation_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  AnnotationRecord r;
  try {
    r.image = j.at("image").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.source = j.value("source", std::string());
    r.meta = j.value("meta", Json::object());
    for (const auto& oj : j.at("objects")) {
      AnnotatedObject o;
      o.label = oj.at("label").get<std::string>();
      o.box = box_from_json(oj.at("box"));
      if (oj.contains("caption") && oj["caption"].is_string()) o.caption = oj["caption"];
      r.objects.push_back(std::move(o));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed record: ") + e.what());
  }
  validate_record(r);
  return r;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(annotation_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void save_annotations(const std::filesystem::path& path, std::span<const AnnotationRecord> recs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& r : recs) out << to_json(r).dump() << '\n';
}

// --- config ------------------------------------------------------------------

std::string_view to_string(GroupingMode m) {
  switch (m) {
    case GroupingMode::random: return "random";
    case GroupingMode::common_object: return "common_object";
    case GroupingMode::clip_adaptive: return "clip_adaptive";
  }
  return "?";
}

GroupingMode parse_grouping_mode(std::string_view name) {
  if (name == "random") return GroupingMode::random;
  if (name == "common_object") return GroupingMode::common_object;
  if (name == "clip_adaptive") return GroupingMode::clip_adaptive;
  throw ConfigError("unknown grouping mode '" + std::string(name) + "'");
}

void ForgeConfig::validate() const {
  const auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("forge config: ") + what);
  };
  check(common_min_area_ratio >= 0 && common_min_area_ratio <= 1, "common area ratio outside [0,1]");
  check(common_images.lo >= 2 && common_images.lo <= common_images.hi, "bad common image range");
  check(region_aspect.lo > 0 && region_aspect.lo <= region_aspect.hi, "bad aspect range");
  check(region_area_ratio.lo >= 0 && region_area_ratio.lo <= region_area_ratio.hi,
        "bad area-ratio range");
  check(region_min_pixels >= 0, "negative pixel gate");
  check(tracking_frames.lo >= 2 && tracking_frames.lo <= tracking_frames.hi, "bad frame range");
  check(group_images.lo >= 2 && group_images.lo <= group_images.hi, "bad group range");
  check(adaptive_sample.lo >= 1 && adaptive_sample.lo <= adaptive_sample.hi,
        "bad adaptive sample range");
  check(adaptive_thres.lo > 0 && adaptive_thres.lo <= adaptive_thres.hi && adaptive_thres.hi <= 1,
        "adaptive threshold range must lie in (0,1]");
  check(workers >= 1, "workers must be >= 1");
}

namespace {
Json range_json(SizeRange r) { return Json::array({r.lo, r.hi}); }
Json range_json(RealRange r) { return Json::array({r.lo, r.hi}); }
template <typename R>
R range_from(const Json& j, const char* key, R def) {
  if (!j.contains(key)) return def;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + " must be [lo, hi]");
  return R{v[0].get<decltype(def.lo)>(), v[1].get<decltype(def.hi)>()};
}
}  // namespace

Json ForgeConfig::to_json() const {
  return Json{{"common_min_area_ratio", common_min_area_ratio},
              {"common_exclude", common_exclude},
              {"common_images", range_json(common_images)},
              {"region_min_annotations", region_min_annotations},
              {"region_aspect", range_json(region_aspect)},
              {"region_area_ratio", range_json(region_area_ratio)},
              {"region_min_pixels", region_min_pixels},
              {"tracking_frames", range_json(tracking_frames)},
              {"group_images", range_json(group_images)},
              {"grouping", std::string(migkit::to_string(grouping))},
              {"adaptive_sample", range_json(adaptive_sample)},
              {"adaptive_thres", range_json(adaptive_thres)},
              {"adaptive_drop_most_similar", adaptive_drop_most_similar},
              {"seed", seed},
              {"workers", workers}};
}

ForgeConfig ForgeConfig::from_json(const Json& j) {
  ForgeConfig c;
  try {
    c.common_min_area_ratio = j.value("common_min_area_ratio", c.common_min_area_ratio);
    if (j.contains("common_exclude")) c.common_exclude = j["common_exclude"].get<std::set<std::string>>();
    c.common_images = range_from(j, "common_images", c.common_images);
    c.region_min_annotations = j.value("region_min_annotations", c.region_min_annotations);
    c.region_aspect = range_from(j, "region_aspect", c.region_aspect);
    c.region_area_ratio = range_from(j, "region_area_ratio", c.region_area_ratio);
    c.region_min_pixels = j.value("region_min_pixels", c.region_min_pixels);
    c.tracking_frames = range_from(j, "tracking_frames", c.tracking_frames);
    c.group_images = range_from(j, "group_images", c.group_images);
    if (j.contains("grouping")) c.grouping = parse_grouping_mode(j["grouping"].get<std::string>());
    c.adaptive_sample = range_from(j, "adaptive_sample", c.adaptive_sample);
    c.adaptive_thres = range_from(j, "adaptive_thres", c.adaptive_thres);
    c.adaptive_drop_most_similar = j.value("adaptive_drop_most_similar", c.adaptive_drop_most_similar);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("forge config: ") + e.what());
  }
  c.validate();
  return c;
}

std::set<std::string> load_label_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open label list " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

std::vector<AnnotatedObject> filter_regions(const AnnotationRecord& rec, const ForgeConfig& cfg) {
  std::vector<AnnotatedObject> out;
  if (rec.objects.size() <= cfg.region_min_annotations) return out;
  const double image_area = static_cast<double>(rec.width) * static_cast<double>(rec.height);
  for (const auto& o : rec.objects) {
    const double h = o.box.height();
    if (!(h > 0)) continue;
    const double aspect = o.box.width() / h;
    const double area = o.box.area();
    if (!cfg.region_aspect.contains(aspect)) continue;
    if (!cfg.region_area_ratio.contains(area / image_area)) continue;
    if (!(area > cfg.region_min_pixels)) continue;
    out.push_back(o);
  }
  return out;
}

// --- embeddings ----------------------------------------------------------------

void validate_embedding_index(const EmbeddingIndex& index) {
  if (index.dim == 0) throw ValidationError("embedding index has dimension 0");
  if (index.data.size() != index.paths.size() * index.dim) {
    throw ValidationError("embedding index data does not match its dimension");
  }
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto r = index.row(i);
    const double norm = std::sqrt(k.dot_f32(r.data(), r.data(), r.size()));
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw ValidationError("embedding for " + index.paths[i] + " has norm " +
                            std::to_string(norm) + ", expected 1");
    }
  }
}

EmbeddingIndex load_embedding_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding index " + path.string());
  EmbeddingIndex idx;
  std::string line;
  std::size_t n = 0;
  const auto fail = [&](const std::string& why) {
    throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + why);
  };
  const auto& k = kernels::active();
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
    if (!j.contains("path") || !j["path"].is_string()) fail("missing path");
    if (!j.contains("dim") || !j["dim"].is_number_unsigned()) fail("missing dim");
    if (!j.contains("embedding") || !j["embedding"].is_array()) fail("missing embedding");
    const auto dim = j["dim"].get<std::size_t>();
    if (dim == 0) fail("dim must be positive");
    if (idx.dim == 0) idx.dim = dim;
    if (dim != idx.dim) fail("dim " + std::to_string(dim) + " differs from " + std::to_string(idx.dim));
    const Json& e = j["embedding"];
    if (e.size() != dim) fail("embedding has " + std::to_string(e.size()) + " values, dim is " + std::to_string(dim));
    const std::size_t base = idx.data.size();
    for (const auto& v : e) {
      if (!v.is_number()) fail("embedding values must be numbers");
      idx.data.push_back(v.get<float>());
    }
    const double norm = std::sqrt(k.dot_f32(idx.data.data() + base, idx.data.data() + base, dim));
    if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
      fail("embedding norm " + std::to_string(norm) + " is not 1 within 1e-4");
    }
    idx.paths.push_back(j["path"].get<std::string>());
  }
  return idx;
}

void save_embedding_index(const std::filesystem::path& path, const EmbeddingIndex& index) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto r = index.row(i);
    out << Json{{"path", index.paths[i]},
                {"dim", index.dim},
                {"embedding", std::vector<float>(r.begin(), r.end())}}
               .dump()
        << '\n';
  }
}

std::size_t adaptive_candidate_count(double thres, std::size_t n_sorted, std::size_t r) {
  const auto k = static_cast<std::size_t>(std::floor(thres * static_cast<double>(n_sorted)));
  return std::max(std::min(k, n_sorted), std::min(r, n_sorted));
}

std::vector<std::vector<std::size_t>> adaptive_groups(const EmbeddingIndex& index,
                                                      const ForgeConfig& cfg) {
  if (index.size() == 0) throw ValidationError("embedding index is empty");
  cfg.validate();
  const auto& kern = kernels::active();

  std::vector<std::size_t> remaining(index.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<double> sims;
  for (std::uint64_t round = 0; !remaining.empty(); ++round) {
    Rng rng = make_rng(cfg.seed, round);
    const double thres =
        std::uniform_real_distribution<double>(cfg.adaptive_thres.lo, cfg.adaptive_thres.hi)(rng);
    const std::size_t r = draw(rng, cfg.adaptive_sample);
    if (remaining.size() <= r + 1) {
      groups.push_back(remaining);
      break;
    }
    const std::size_t anchor = remaining.front();
    const std::size_t n_others = remaining.size() - 1;
    sims.assign(n_others, 0.0);
    const auto a = index.row(anchor);
    parallel_for(n_others, cfg.workers, [&](std::size_t j) {
      const auto b = index.row(remaining[j + 1]);
      sims[j] = kern.dot_f32(a.data(), b.data(), index.dim);
    });
    std::vector<std::size_t> order(n_others);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sims[x] > sims[y]; });
    std::size_t skip = cfg.adaptive_drop_most_similar && n_others > r ? 1 : 0;
    const std::size_t n_sorted = n_others - skip;
    const std::size_t k = adaptive_candidate_count(thres, n_sorted, r);
    std::vector<std::size_t> cand(order.begin() + static_cast<std::ptrdiff_t>(skip),
                                  order.begin() + static_cast<std::ptrdiff_t>(skip + k));
    // Partial Fisher-Yates: the first min(r, k) slots become the sample.
    const std::size_t take = std::min(r, cand.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, cand.size() - 1)(rng);
      std::swap(cand[i], cand[j]);
    }
    std::vector<std::size_t> group{anchor};
    std::vector<bool> gone(remaining.size(), false);
    gone[0] = true;
    for (std::size_t i = 0; i < take; ++i) {
      group.push_back(remaining[cand[i] + 1]);
      gone[cand[i] + 1] = true;
    }
    groups.push_back(std::move(group));
    std::vector<std::size_t> next;
    next.reserve(remaining.size() - take - 1);
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (!gone[i]) next.push_back(remaining[i]);
    }
    remaining = std::move(next);
  }
  return groups;
}

std::vector<std::vector<std::size_t>> random_groups(std::size_t n, SizeRange sizes,
                                                    std::uint64_t seed) {
  if (sizes.lo == 0 || sizes.lo > sizes.hi) throw ConfigError("bad group size range");
  std::vector<std::size_t> items(n);
  std::iota(items.begin(), items.end(), 0);
  Rng rng = make_rng(seed, 0x72616e64);
  std::shuffle(items.begin(), items.end(), rng);
  return chunk(items, sizes, rng);
}

std::vector<std::size_t> tracking_frame_indices(std::size_t frames, std::size_t n) {
  if (frames == 0 || n == 0) return {};
  n = std::min(n, frames);
  if (n == 1) return {0};
  const std::size_t stride = static_cast<std::size_t>(
      std::llround(static_cast<double>(frames - 1) / static_cast<double>(n - 1)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = std::min(i * stride, frames - 1 - (n - 1 - i));
  idx[n - 1] = frames - 1;
  return idx;
}

// --- training instances ------------------------------------------------------------

std::string render_answer(const Instance& inst) {
  std::string out;
  for (const Region& r : inst.ground_truth) {
    BBox b = convert(r.box, r.space, CoordSpace::norm1000());
    b = clamp(BBox{std::round(b.x1), std::round(b.y1), std::round(b.x2), std::round(b.y2)}, 0, 0,
              kNorm1000Max, kNorm1000Max);
    if (!out.empty()) out += '\n';
    out += "Image-" + std::to_string(r.image_index + 1) + ": " + render_box_token(b);
  }
  return out;
}

Json to_json(const TrainInstance& t) {
  Json j = to_json(t.instance);
  j["answer"] = t.answer;
  return j;
}

TrainInstance train_instance_from_json(const Json& j) {
  TrainInstance t;
  t.instance = instance_from_json(j);
  t.answer = j.value("answer", std::string());
  return t;
}

void save_train_instances(const std::filesystem::path& path, std::span<const TrainInstance> v) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& t : v) out << to_json(t).dump() << '\n';
}

std::vector<TrainInstance> load_train_instances(const std::filesystem::path& path) {
  LoadOptions opts;
  opts.check_images = false;
  opts.allow_unlabeled = true;
  const auto instances = load_dataset(path, opts);
  std::ifstream in(path);
  std::vector<TrainInstance> out;
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back({instances.at(i++), Json::parse(line).value("answer", std::string())});
  }
  return out;
}

Json ForgeLog::to_json() const { return Json{{"counters", counters}, {"messages", messages}}; }

std::vector<TrainInstance> make_task_set(std::span<const AnnotationRecord> records,
                                         TaskKind task, const ForgeConfig& cfg,
                                         const ForgeContext& ctx, ForgeLog* log) {
  cfg.validate();
  std::vector<TrainInstance> out;
  switch (task) {
    case TaskKind::static_difference:
    case TaskKind::robust_difference:
      out = make_difference(records, task, ctx, log);
      break;
    case TaskKind::common_object:
      out = make_common_object(records, cfg, ctx, log);
      break;
    case TaskKind::object_tracking:
      out = make_tracking(records, cfg, ctx, log);
      break;
    case TaskKind::group_grounding:
      out = make_group_grounding(records, cfg, ctx, log);
      break;
    case TaskKind::region_locating:
      out = make_region_locating(records, cfg, ctx, log);
      break;
    case TaskKind::referring_grounding:
      out = make_referring(records, cfg, ctx, log);
      break;
    default:
      throw ConfigError("no construction recipe for task " + std::string(to_string(task)));
  }
  if (log != nullptr) log->count("instances", out.size());
  return out;
}

// --- manifests -----------------------------------------------------------------------

const std::vector<MixShare>& stage_mix(int stage) {
  static const std::vector<MixShare> kStage1 = {
      {"S-Understanding", "s_understanding", 17},
      {"S-Grounding", "s_grounding", 13},
      {"M-Understanding", "m_understanding", 16},
      {"M-Grounding", "m_grounding_stage1", 54},
  };
  static const std::vector<MixShare> kStage2 = {
      {"S-Understanding", "s_understanding", 9},
      {"S-Grounding", "s_grounding", 7},
      {"M-Understanding", "m_understanding", 8},
      {"M-Grounding", "m_grounding_stage1", 27},
      {"M-Grounding", "m_grounding_stage2", 49},
  };
  if (stage == 1) return kStage1;
  if (stage == 2) return kStage2;
  throw ConfigError("stage must be 1 or 2");
}

Manifest stage_manifest(int stage, std::size_t total,
                        const std::map<std::string, SourceSet>& available, std::uint64_t seed) {
  const auto& mix = stage_mix(stage);
  for (const auto& share : mix) {
    if (!available.contains(share.source)) {
      throw ConfigError("stage " + std::to_string(stage) + " needs source '" + share.source + "'");
    }
  }
  Manifest m;
  m.stage = stage;
  m.total = total;
  std::vector<double> frac(mix.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double quota = static_cast<double>(total) * mix[i].percent / 100.0;
    const auto base = static_cast<std::size_t>(std::floor(quota));
    frac[i] = quota - static_cast<double>(base);
    m.entries.push_back({mix[i], base, {}});
    assigned += base;
  }
  std::vector<std::size_t> order(mix.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++m.entries[order[k % order.size()]].count;

  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    auto& e = m.entries[i];
    const SourceSet& src = available.at(e.share.source);
    if (src.ids.empty() || e.count == 0) continue;
    std::vector<std::string> pool = src.ids;
    Rng rng = make_rng(seed, 0x6d616e69, i);
    std::shuffle(pool.begin(), pool.end(), rng);
    e.ids.reserve(e.count);
    for (std::size_t c = 0; c < e.count; ++c) e.ids.push_back(pool[c % pool.size()]);
  }
  return m;
}

Json Manifest::to_json() const {
  Json entries_j = Json::array();
  for (const auto& e : entries) {
    Json j{{"type", e.share.type},
           {"source", e.share.source},
           {"percent", e.share.percent},
           {"count", e.count},
           {"achieved_percent",
            total == 0 ? 0.0 : 100.0 * static_cast<double>(e.count) / static_cast<double>(total)}};
    if (!e.ids.empty()) j["ids"] = e.ids;
    entries_j.push_back(std::move(j));
  }
  return Json{{"stage", stage}, {"total", total}, {"entries", entries_j}};
}

}  // namespace migkit

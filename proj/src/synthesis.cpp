// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/synthesis.hpp"

#include <cmath>
#include <mutex>

#include "migkit/error.hpp"
#include "migkit/image_io.hpp"
#include "migkit/outparse.hpp"
#include "migkit/parallel.hpp"

namespace migkit {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Drops list decorations such as "1.", "-", "*" or "**" before a marker.
std::string_view strip_list_marker(std::string_view s) {
  s = trim(s);
  std::size_t i = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) s.remove_prefix(i + 1);
  s = trim(s);
  while (!s.empty() && (s.front() == '-' || s.front() == '*')) s.remove_prefix(1);
  return trim(s);
}

std::string strip_bold(std::string_view s) {
  std::string out(s);
  for (std::size_t p; (p = out.find("**")) != std::string::npos;) out.erase(p, 2);
  return out;
}

Json image_part(const std::filesystem::path& path) {
  return Json{{"type", "image_url"}, {"image_url", {{"url", image_io::data_url(path)}}}};
}

Json text_part(const std::string& text) { return Json{{"type", "text"}, {"text", text}}; }

Json user_payload(Json content) {
  return Json{{"messages", Json::array({{{"role", "user"}, {"content", std::move(content)}}})}};
}

BBox to_norm(const AnnotationRecord& rec, const BBox& b) {
  const BBox n = convert(b, CoordSpace::pixel(rec.width, rec.height), CoordSpace::norm1000());
  return clamp(BBox{std::round(n.x1), std::round(n.y1), std::round(n.x2), std::round(n.y2)}, 0, 0,
               kNorm1000Max, kNorm1000Max);
}

}  // namespace

Json SynthesisStats::to_json() const {
  return Json{{"groups", groups},       {"captions", captions},
              {"refined_objects", refined_objects}, {"dropped_objects", dropped_objects},
              {"qa_pairs", qa_pairs},   {"kept", kept},
              {"discarded", discarded}, {"failed_groups", failed_groups}};
}

std::vector<QaPair> parse_qa_pairs(std::string_view text) {
  std::vector<QaPair> out;
  std::string* field = nullptr;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    const std::string line = strip_bold(strip_list_marker(raw));
    const std::string_view l = trim(line);
    if (l.starts_with("Q:") || l.starts_with("Question:")) {
      out.push_back({});
      field = &out.back().question;
      *field = std::string(trim(l.substr(l.find(':') + 1)));
    } else if ((l.starts_with("A:") || l.starts_with("Answer:")) && !out.empty()) {
      field = &out.back().answer;
      *field = std::string(trim(l.substr(l.find(':') + 1)));
    } else if (field != nullptr && !l.empty()) {
      *field += "\n";
      *field += l;
    }
  }
  std::erase_if(out, [](const QaPair& p) { return p.question.empty() || p.answer.empty(); });
  return out;
}

std::string render_annotations(const AnnotationRecord& rec) {
  std::string out;
  for (const auto& o : rec.objects) {
    if (!out.empty()) out += '\n';
    out += (o.caption && !o.caption->empty() ? *o.caption : o.label) + " " +
           render_box_token(to_norm(rec, o.box));
  }
  return out;
}

std::vector<AnnotatedObject> parse_refined(std::string_view text, const AnnotationRecord& rec) {
  std::vector<AnnotatedObject> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    const ParsedAnswer a = parse_boxes(line);
    if (a.tier != 1) continue;
    const std::string_view name = strip_list_marker(line.substr(0, line.find("<|box_start|>")));
    for (const ParsedBox& pb : a.boxes) {
      const BBox px =
          convert(pb.box, CoordSpace::norm1000(), CoordSpace::pixel(rec.width, rec.height));
      if (!(px.area() > 0)) continue;
      AnnotatedObject o;
      o.label = name.empty() ? "object" : std::string(name);
      o.caption = o.label;
      o.box = px;
      out.push_back(std::move(o));
    }
  }
  return out;
}

std::vector<TrainInstance> synthesize_freeform(std::span<const AnnotationRecord> records,
                                               std::span<const std::vector<std::size_t>> groups,
                                               ChatClient& caption_ep, ChatClient& refine_ep,
                                               ChatClient& instruct_ep,
                                               const SynthesisOptions& opts,
                                               SynthesisStats* stats) {
  std::mutex mu;
  SynthesisStats total;
  total.groups = groups.size();
  std::vector<std::vector<TrainInstance>> per_group(groups.size());

  parallel_for(groups.size(), opts.workers, [&](std::size_t g) {
    SynthesisStats s;
    const auto& group = groups[g];
    try {
      std::vector<std::string> captions;
      std::vector<AnnotationRecord> refined;
      for (std::size_t idx : group) {
        if (idx >= records.size()) throw ValidationError("group references a missing record");
        const auto& rec = records[idx];
        const auto path = resolve_image_path({rec.image, rec.width, rec.height}, opts.image_root);

        const auto cap = caption_ep.complete(
            user_payload(Json::array({image_part(path), text_part(opts.templates.caption)})));
        captions.emplace_back(trim(cap.content));
        ++s.captions;

        AnnotationRecord r = rec;
        if (!rec.objects.empty()) {
          const std::string prompt = opts.templates.refine + "\n" + render_annotations(rec);
          const auto reply =
              refine_ep.complete(user_payload(Json::array({image_part(path), text_part(prompt)})));
          r.objects = parse_refined(reply.content, rec);
          s.refined_objects += r.objects.size();
          if (r.objects.size() < rec.objects.size()) {
            s.dropped_objects += rec.objects.size() - r.objects.size();
          }
        }
        refined.push_back(std::move(r));
      }

      std::string prompt = opts.templates.instruction;
      for (std::size_t k = 0; k < refined.size(); ++k) {
        prompt += "\nImage-" + std::to_string(k + 1) + ":\nCaption: " + captions[k] +
                  "\nObjects:\n" + render_annotations(refined[k]) + "\n";
      }
      const auto reply = instruct_ep.complete(user_payload(Json::array({text_part(prompt)})));

      const auto pairs = parse_qa_pairs(reply.content);
      s.qa_pairs += pairs.size();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const ParsedAnswer a = parse_boxes(pairs[p].answer);
        bool ok = a.tier == 1 && !a.boxes.empty();
        Instance inst;
        inst.id = "freeform-" + std::to_string(g) + "-" + std::to_string(p);
        inst.task = TaskKind::freeform;
        inst.query_text = pairs[p].question;
        for (std::size_t idx : group) {
          const auto& rec = records[idx];
          inst.images.push_back(ImageRef{rec.image, rec.width, rec.height});
        }
        for (const ParsedBox& pb : a.boxes) {
          const std::size_t img = pb.image_index.value_or(0);
          if (img >= group.size() || !(pb.box.area() > 0)) {
            ok = false;
            break;
          }
          inst.ground_truth.push_back({img, pb.box, CoordSpace::norm1000()});
        }
        if (!ok) {
          ++s.discarded;
          continue;
        }
        per_group[g].push_back({std::move(inst), pairs[p].answer});
        ++s.kept;
      }
    } catch (const TransportError&) {
      per_group[g].clear();
      s = SynthesisStats{};
      s.failed_groups = 1;
    }
    std::lock_guard lock(mu);
    total.captions += s.captions;
    total.refined_objects += s.refined_objects;
    total.dropped_objects += s.dropped_objects;
    total.qa_pairs += s.qa_pairs;
    total.kept += s.kept;
    total.discarded += s.discarded;
    total.failed_groups += s.failed_groups;
  });

  std::vector<TrainInstance> out;
  for (auto& v : per_group) {
    for (auto& t : v) out.push_back(std::move(t));
  }
  if (stats != nullptr) *stats = total;
  return out;
}

}  // namespace migkit

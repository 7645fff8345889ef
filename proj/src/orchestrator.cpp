// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "migkit/error.hpp"
#include "migkit/image_io.hpp"
#include "migkit/journal.hpp"
#include "migkit/outparse.hpp"
#include "migkit/parallel.hpp"
#include "migkit/scoring.hpp"

namespace migkit {

namespace {

std::vector<std::size_t> all_images(const Instance& inst) {
  std::vector<std::size_t> v(inst.images.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

std::vector<std::size_t> index_list(const Json& j, std::size_t n) {
  std::set<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ValidationError("image index lists must hold integers");
    }
    const auto k = v.get<long long>();
    if (k < 0 || static_cast<std::size_t>(k) >= n) {
      throw ValidationError("image index " + std::to_string(k) + " out of range");
    }
    out.insert(static_cast<std::size_t>(k));
  }
  return {out.begin(), out.end()};
}

std::string box_binding(const Instance& inst) {
  const Region& q = inst.query_regions.front();
  const BBox b = convert(q.box, q.space, CoordSpace::norm1000());
  return "(" + format_coord(std::round(b.x1)) + "," + format_coord(std::round(b.y1)) + "),(" +
         format_coord(std::round(b.x2)) + "," + format_coord(std::round(b.y2)) + ")";
}

Bindings base_bindings(const Instance& inst, const std::vector<std::size_t>& images) {
  Bindings b;
  b["QUESTION"] = inst.query_text && !inst.query_text->empty() ? *inst.query_text
                                                               : default_question(inst.task);
  if (!inst.query_regions.empty()) b["BOX"] = box_binding(inst);

  const std::vector<std::size_t> cands = candidate_images(inst);
  std::size_t ref = inst.images.size() - 1;
  for (std::size_t i = 0; i < inst.images.size(); ++i) {
    if (std::find(cands.begin(), cands.end(), i) == cands.end()) {
      ref = i;
      break;
    }
  }
  b["IMAGE_ORD"] = ordinal_word(ref + 1);

  std::string choices;
  for (std::size_t k = 0; k < images.size(); ++k) {
    if (k > 0) choices += " | ";
    choices += "Image" + std::to_string(k + 1);
  }
  b["IMAGE_CHOICES"] = choices;
  return b;
}

class InstanceRunner {
 public:
  InstanceRunner(const Instance& inst, ChatClient& client, const EvalOptions& opts)
      : inst_(inst), client_(client), opts_(opts) {
    rec_.instance_id = inst.id;
    rec_.strategy = opts.strategy;
    rec_.form = opts.form;
  }

  RunRecord run() {
    try {
      if (opts_.strategy == Strategy::direct) {
        run_direct();
      } else if (inst_.task == TaskKind::group_grounding) {
        run_group_cot();
      } else {
        run_cot();
      }
    } catch (const TransportError& e) {
      rec_.failed = true;
      rec_.error = e.what();
    }
    if (!inst_.ground_truth.empty()) {
      const TargetMatch m = match_targets(inst_, rec_.predictions, opts_.hit_threshold);
      rec_.target_iou = m.best_iou;
      rec_.target_hit = m.hit;
    }
    return std::move(rec_);
  }

 private:
  Bindings focus(std::size_t k) const { return Bindings{{"IMAGE_K", std::to_string(k + 1)}}; }

  double max_coord() const {
    return opts_.prediction_space == SpaceKind::pixel ? std::numeric_limits<double>::infinity()
                                                      : kNorm1000Max;
  }

  CoordSpace space_of(std::size_t image) const {
    return opts_.prediction_space == SpaceKind::pixel ? inst_.pixel_space(image)
                                                      : CoordSpace::norm1000();
  }

  // Sends one request; a TransportError is recorded on the step, then rethrown.
  const StepRecord& ask(std::string step, const MessageSpec& msg,
                        std::optional<std::size_t> target) {
    StepRecord s;
    s.step = std::move(step);
    s.images = msg.images;
    s.target_image = target;
    const Json payload = render_payload(inst_, msg, opts_.image_root);
    try {
      const ChatReply reply = client_.complete(payload);
      s.parsed = parse_boxes(reply.content, max_coord());
      s.latency_ms = reply.latency_ms;
    } catch (const TransportError& e) {
      s.ok = false;
      s.error = e.what();
      rec_.steps.push_back(std::move(s));
      throw;
    }
    rec_.steps.push_back(std::move(s));
    return rec_.steps.back();
  }

  void attribute_to(const ParsedAnswer& a, std::size_t image) {
    for (const ParsedBox& pb : a.boxes) rec_.predictions.push_back({image, pb.box, space_of(image)});
  }

  // Labelled boxes go to their image; unlabelled ones fill the candidates in
  // order. Extras and out-of-range labels are dropped.
  void attribute_all(const ParsedAnswer& a, const std::vector<std::size_t>& cands) {
    std::size_t next = 0;
    for (const ParsedBox& pb : a.boxes) {
      if (pb.image_index) {
        if (*pb.image_index < inst_.images.size()) {
          rec_.predictions.push_back({*pb.image_index, pb.box, space_of(*pb.image_index)});
        }
      } else if (next < cands.size()) {
        const std::size_t img = cands[next++];
        rec_.predictions.push_back({img, pb.box, space_of(img)});
      }
    }
  }

  void run_direct() {
    const auto all = all_images(inst_);
    const auto cands = candidate_images(inst_);
    if (opts_.form == AnsweringForm::polling) {
      for (std::size_t c : cands) {
        const auto msg = build_message(inst_, opts_.templates, "direct", all, focus(c),
                                       all.size() > 1 ? opts_.templates.polling_focus : "");
        attribute_to(ask("direct", msg, c).parsed, c);
      }
    } else {
      const auto msg = build_message(inst_, opts_.templates, "direct", all, {},
                                     all.size() > 1 ? opts_.templates.all_images : "");
      attribute_all(ask("direct", msg, std::nullopt).parsed, cands);
    }
  }

  void run_cot() {
    const auto all = all_images(inst_);
    const auto cands = candidate_images(inst_);
    const StepRecord& s1 = ask("step1", build_message(inst_, opts_.templates, "step1", all),
                               std::nullopt);
    std::string referring = extract_referring(s1.parsed.raw);
    rec_.steps.back().parsed.referring_text = referring;
    rec_.referring = referring;
    const Bindings resp{{"RESPONSE", referring}};

    if (opts_.form == AnsweringForm::all) {
      const auto msg = build_message(inst_, opts_.templates, "step2", all, resp,
                                     all.size() > 1 ? opts_.templates.all_images : "");
      attribute_all(ask("step2", msg, std::nullopt).parsed, cands);
      return;
    }
    for (std::size_t c : cands) {
      MessageSpec msg;
      if (opts_.strategy == Strategy::cot_single) {
        msg = build_message(inst_, opts_.templates, "step2", {c}, resp);
      } else {
        Bindings b = resp;
        b.merge(focus(c));
        msg = build_message(inst_, opts_.templates, "step2", all, b,
                            all.size() > 1 ? opts_.templates.polling_focus : "");
      }
      attribute_to(ask("step2", msg, c).parsed, c);
    }
  }

  // Step 1 picks the image, step 2 grounds inside it. A failed selection
  // falls back to the first image.
  void run_group_cot() {
    const auto all = all_images(inst_);
    const StepRecord& s1 = ask("step1", build_message(inst_, opts_.templates, "step1", all),
                               std::nullopt);
    const std::size_t chosen = parse_image_choice(s1.parsed.raw, all.size()).value_or(0);
    rec_.selected_image = chosen;
    MessageSpec msg;
    if (opts_.strategy == Strategy::cot_single) {
      msg = build_message(inst_, opts_.templates, "step2", {chosen});
    } else {
      msg = build_message(inst_, opts_.templates, "step2", all, focus(chosen),
                          all.size() > 1 ? opts_.templates.polling_focus : "");
    }
    attribute_to(ask("step2", msg, chosen).parsed, chosen);
  }

  const Instance& inst_;
  ChatClient& client_;
  const EvalOptions& opts_;
  RunRecord rec_;
};

}  // namespace

std::vector<std::size_t> candidate_images(const Instance& inst) {
  const std::size_t n = inst.images.size();
  if (inst.meta.contains("candidate_images")) return index_list(inst.meta["candidate_images"], n);
  if (inst.meta.contains("reference_images")) {
    const auto refs = index_list(inst.meta["reference_images"], n);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::binary_search(refs.begin(), refs.end(), i)) out.push_back(i);
    }
    return out;
  }
  switch (inst.task) {
    case TaskKind::object_tracking:
    case TaskKind::multi_view:
    case TaskKind::referring_grounding:
    case TaskKind::correspondence:
      if (n > 1) {
        std::vector<std::size_t> out;
        for (std::size_t i = 1; i < n; ++i) out.push_back(i);
        return out;
      }
      break;
    case TaskKind::region_locating:
      return {0};
    default:
      break;
  }
  return all_images(inst);
}

MessageSpec build_message(const Instance& inst, const TemplateSet& templates,
                          std::string_view step, std::vector<std::size_t> images,
                          const Bindings& extra, std::string_view fragment) {
  const PromptTemplate& tmpl = templates.get(inst.task, step);
  Bindings b = base_bindings(inst, images);
  for (const auto& [k, v] : extra) b[k] = v;

  MessageSpec msg;
  msg.text = render_template(tmpl.text, b);
  if (!fragment.empty()) msg.text += " " + render_template(fragment, b);
  if (tmpl.append_format && !templates.format_suffix.empty()) {
    msg.text += " " + templates.format_suffix;
  }
  if (tmpl.mark_reference && !inst.query_regions.empty()) {
    const std::size_t ref = inst.query_regions.front().image_index;
    if (std::find(images.begin(), images.end(), ref) != images.end()) msg.marked_image = ref;
  }
  msg.images = std::move(images);
  return msg;
}

Json render_payload(const Instance& inst, const MessageSpec& msg,
                    const std::filesystem::path& image_root) {
  Json content = Json::array();
  for (std::size_t i : msg.images) {
    if (i >= inst.images.size()) throw ValidationError("message references a missing image");
    const auto path = resolve_image_path(inst.images[i], image_root);
    std::string url;
    if (msg.marked_image && *msg.marked_image == i) {
      const Region& q = inst.query_regions.front();
      url = image_io::data_url_with_box(path, convert(q.box, q.space, inst.pixel_space(i)));
    } else {
      url = image_io::data_url(path);
    }
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", std::move(url)}}}});
  }
  content.push_back({{"type", "text"}, {"text", msg.text}});
  return Json{{"messages", Json::array({{{"role", "user"}, {"content", content}}})}};
}

Json render_messages(const Instance& inst, const TemplateSet& templates,
                     std::string_view step, const Bindings& extra,
                     const std::filesystem::path& image_root) {
  return render_payload(inst, build_message(inst, templates, step, all_images(inst), extra),
                        image_root);
}

RunRecord run_instance(const Instance& inst, ChatClient& client, const EvalOptions& opts) {
  return InstanceRunner(inst, client, opts).run();
}

BatchResult run_batch(std::span<const Instance> dataset, ChatClient& client,
                      const EvalOptions& opts, const BatchOptions& batch) {
  std::optional<Journal> journal;
  if (!batch.journal.empty()) journal.emplace(batch.journal, dataset, batch.config);

  BatchResult result;
  std::vector<std::optional<RunRecord>> slots(dataset.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (journal && journal->completed(dataset[i].id)) {
      slots[i] = journal->existing().at(dataset[i].id);
      ++result.resumed;
    } else {
      todo.push_back(i);
    }
  }
  if (batch.stop_after > 0 && todo.size() > batch.stop_after) todo.resize(batch.stop_after);

  parallel_for(todo.size(), batch.workers, [&](std::size_t k) {
    const std::size_t i = todo[k];
    RunRecord rec = run_instance(dataset[i], client, opts);
    if (journal) journal->append(rec);
    if (batch.on_record) batch.on_record(rec);
    slots[i] = std::move(rec);
  });

  result.executed = todo.size();
  for (auto& s : slots) {
    if (s) result.records.push_back(std::move(*s));
  }
  return result;
}

}  // namespace migkit

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/prompts.hpp"

#include <array>
#include <fstream>

#include "migkit/error.hpp"

namespace migkit {

namespace {

bool is_placeholder_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

// Returns [begin, end) of the next {NAME} marker at or after `from`.
std::pair<std::size_t, std::size_t> next_placeholder(std::string_view text,
                                                     std::size_t from) {
  for (std::size_t i = text.find('{', from); i != std::string_view::npos;
       i = text.find('{', i + 1)) {
    std::size_t j = i + 1;
    while (j < text.size() && is_placeholder_char(text[j])) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') return {i, j + 1};
  }
  return {std::string_view::npos, std::string_view::npos};
}

constexpr std::string_view kFormat =
    "Format: <|box_start|>(x1,y1),(x2,y2)<|box_end|>. Don't generate additional words.";

constexpr std::string_view kPollingFocus = "Ground the target in Image-{IMAGE_K} only.";

constexpr std::string_view kAllImages =
    "Ground the target in every image that contains it and prefix each box with its "
    "image label, e.g. Image-1: <|box_start|>(x1,y1),(x2,y2)<|box_end|>.";

constexpr std::string_view kCaption =
    "Describe this image thoroughly in a fluent paragraph. Include all the objects and "
    "their attributes(color, shape, size and feature), relative position and relationship.";

constexpr std::string_view kRefine =
    "Now I’d like you to inspect the original image carefully. Then filter, refine and "
    "enhance these annotated objects. Finally, just give me your final modified annotations.\n"
    "\n"
    "*Filtering*\n"
    "Based on you insightful observation of the image, please eliminate the obviously "
    "inaccurate (object,bbox) pairs, which in supposed to be small in quantity.\n"
    "\n"
    "*Refine*\n"
    "Refine and enhance the original class/name of each object into a short yet richer "
    "caption containing its attributes like color, position, feature(e.g plane "
    "<|box_start|>(x1,y1),(x2,y2)<|box_end|> -> dark gray plane flying in the sky "
    "<|box_start|>(x1,y1),(x2,y2)<|box_end|>).\n"
    "\n"
    "*Amplify*\n"
    "If any important objects are missing from the annotations, and you believe they are "
    "significant and essential, and you are confident of their location, feel free to add "
    "them to the final annotations.\n"
    "\n"
    "*Output Format*\n"
    "Modified object caption followed by its bounding box coordinates.\n"
    "\n"
    "Now the original bounding box annotations I give to you are:";

constexpr std::string_view kInstruction =
    "Based on the following detailed information of multiple images, please compose "
    "meaningful and flexible CROSS-IMAGE grounding questions that link different objects "
    "across the images by their attributes similarity/contrast—such as color, position, "
    "features, gender, size, shape, etc.—or by other potential logical connection "
    "between them.\n"
    "Specifically:\n"
    "1.The questions should include CROSS-IMAGE grounding requests that requires the answer "
    "to identify and locate various potentially connected object across different images. "
    "You can use the connection or similarity between these objects to refer the target "
    "item.\n"
    "2.When referring an object in the question, keep the reference description concise and "
    "avoid giving away unnecessary information(like bbox or over-detailed caption) that "
    "could lead to answering too easily. You are encouraged to refer the target object to "
    "be grounded by the connection of these objects, instead of explicitly point out the "
    "object. For instance: “ground the car in image-2 that contrasts most in quality "
    "with the shabby vehicle in image-4”, rather than “ground the fancy red sports "
    "car(explicitly pointing out) in image-2 that contrasts most in quality with the shabby "
    "vehicle in image-4”, by doing so we can also introduce a bit reasoning process.\n"
    "3.Include the bounding box coordinates of referred object in the answer as well as the "
    "explanation. (Actually you can get a lot of information from the coordinates, which "
    "are formatted as (x1,y1),(x2,y2))\n"
    "4.Strictly format the output as simple Q: A:. In answer, follow the format "
    "<ref>object</ref> for objects mentioned.\n"
    "Below are the detailed image captions and the objects in the corresponding images:";

struct StepTemplates {
  TaskKind task;
  std::string_view step1;
  std::string_view step2;
  bool marked;  // step-1 image carries the red reference box
};

// Two-step templates, one row per task.
constexpr std::array<StepTemplates, 10> kCotTemplates = {{
    {TaskKind::static_difference,
     "Compare these two images carefully and tell me where does they differ. Please answer "
     "briefly in single phrase or words.",
     "According to the object difference/change: {RESPONSE}, please ground this difference "
     "with bounding box coordinates.",
     false},
    {TaskKind::robust_difference,
     "Compare these two images carefully and describe the prominent different object with "
     "really simple words or phrase.",
     "Now ground the object difference/change : \"{RESPONSE}\"  with bounding box "
     "coordinates.",
     false},
    {TaskKind::referring_grounding,
     "Watch carefully and briefly describe the object in the Image-1.",
     "Please find and ground the object <|object_ref_start|>{RESPONSE}<|object_ref_end|> "
     "with bounding box coordinates.",
     false},
    {TaskKind::common_object,
     "These images share one object in common. Recognize it and tell me its name in single "
     "phrase or words.",
     "Please locate and ground the target object according to the reference: "
     "<|object_ref_start|> {RESPONSE} <|object_ref_end|>",
     false},
    {TaskKind::region_locating,
     "Describe the content of the {IMAGE_ORD} picture with simple phrase or words.",
     "Please ground the object <|object_ref_start|>{RESPONSE}<|object_ref_end|> with "
     "bounding box coordinates.",
     false},
    {TaskKind::multi_view,
     "Describe the object in the first image marked with red bounding box(<|box_start|> "
     "{BOX} <|box_end|>) with simple phrase or word. You can refer to other images for more "
     "precise recognition and description.",
     "Locate and ground the object <|object_ref_start|> {RESPONSE} <|object_ref_end|> with "
     "bounding box coordinates.",
     true},
    {TaskKind::object_tracking,
     "Describe the object in the first image marked with red bounding box with simple "
     "phrase.",
     "Now ground the target moving object {RESPONSE} with bounding box coordinates.", true},
    {TaskKind::group_grounding,
     "{QUESTION} Just recognize and tell me which image is it in. Answer from: "
     "{IMAGE_CHOICES}",
     "{QUESTION}", false},
    {TaskKind::reasoning,
     "{QUESTION} Name this object in the Image-2 with simple phrase.",
     "Please locate and ground the object <|object_ref_start|>{RESPONSE}<|object_ref_end|> "
     "with bounding box coordinates.",
     false},
    {TaskKind::correspondence,
     "For the first image, describe the semantic/functional feature of the area marked by "
     "the red bounding box (<|box_start|>{BOX}<|box_end|>).",
     "Ground the area that shares the same semantic or functional meaning of: {RESPONSE}.",
     true},
}};

Json template_to_json(const PromptTemplate& t) {
  return Json{{"text", t.text}, {"mark_reference", t.mark_reference},
              {"append_format", t.append_format}};
}

PromptTemplate template_from_json(const Json& j) {
  if (j.is_string()) return PromptTemplate{j.get<std::string>(), false, false};
  return PromptTemplate{j.at("text").get<std::string>(), j.value("mark_reference", false),
                        j.value("append_format", false)};
}

}  // namespace

bool has_placeholder(std::string_view text) {
  return next_placeholder(text, 0).first != std::string_view::npos;
}

std::string render_template(std::string_view text, const Bindings& bindings) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto [b, e] = next_placeholder(text, pos);
    if (b == std::string_view::npos) break;
    const std::string name(text.substr(b + 1, e - b - 2));
    const auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw ConfigError("template placeholder {" + name + "} is unbound");
    }
    out.append(text.substr(pos, b - pos));
    out.append(it->second);
    pos = e;
  }
  out.append(text.substr(pos));
  return out;
}

TemplateSet TemplateSet::builtin() {
  TemplateSet ts;
  ts.format_suffix = kFormat;
  ts.polling_focus = kPollingFocus;
  ts.all_images = kAllImages;
  ts.caption = kCaption;
  ts.refine = kRefine;
  ts.instruction = kInstruction;
  for (const auto& row : kCotTemplates) {
    ts.set(row.task, "step1", {std::string(row.step1), row.marked, false});
    ts.set(row.task, "step2", {std::string(row.step2), false, true});
  }
  for (TaskKind task : benchmark_tasks()) {
    const bool marked = task == TaskKind::object_tracking || task == TaskKind::multi_view ||
                        task == TaskKind::correspondence;
    ts.set(task, "direct", {"{QUESTION}", marked, true});
  }
  ts.set(TaskKind::freeform, "direct", {"{QUESTION}", false, true});
  return ts;
}

TemplateSet TemplateSet::from_json(const Json& j) {
  TemplateSet ts;
  try {
    ts.format_suffix = j.at("format_suffix").get<std::string>();
    ts.polling_focus = j.at("polling_focus").get<std::string>();
    ts.all_images = j.at("all_images").get<std::string>();
    const Json& syn = j.at("synthesis");
    ts.caption = syn.at("caption").get<std::string>();
    ts.refine = syn.at("refine").get<std::string>();
    ts.instruction = syn.at("instruction").get<std::string>();
    for (const auto& [task_name, steps] : j.at("tasks").items()) {
      const TaskKind task = parse_task_kind(task_name);
      for (const auto& [step, tj] : steps.items()) ts.set(task, step, template_from_json(tj));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed template set: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("malformed template set: ") + e.what());
  }
  return ts;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open template file " + path.string());
  try {
    return from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ConfigError("template file " + path.string() + ": " + e.what());
  }
}

Json TemplateSet::to_json() const {
  Json tasks = Json::object();
  for (const auto& [key, tmpl] : table_) {
    tasks[std::string(migkit::to_string(key.first))][key.second] = template_to_json(tmpl);
  }
  return Json{{"format_suffix", format_suffix},
              {"polling_focus", polling_focus},
              {"all_images", all_images},
              {"synthesis", {{"caption", caption}, {"refine", refine}, {"instruction", instruction}}},
              {"tasks", tasks}};
}

const PromptTemplate& TemplateSet::get(TaskKind task, std::string_view step) const {
  const auto it = table_.find({task, std::string(step)});
  if (it == table_.end()) {
    throw ConfigError("no prompt template for (" + std::string(migkit::to_string(task)) +
                      ", " + std::string(step) + ")");
  }
  return it->second;
}

bool TemplateSet::has(TaskKind task, std::string_view step) const {
  return table_.contains({task, std::string(step)});
}

void TemplateSet::set(TaskKind task, std::string step, PromptTemplate tmpl) {
  table_[{task, std::move(step)}] = std::move(tmpl);
}

void TemplateSet::erase(TaskKind task, std::string_view step) {
  table_.erase({task, std::string(step)});
}

std::string default_question(TaskKind task) {
  switch (task) {
    case TaskKind::object_tracking:
      return "Track the object marked with the red bounding box in the first image and "
             "ground it in the other images.";
    case TaskKind::multi_view:
      return "Ground the object marked with the red bounding box in the first image in the "
             "other views.";
    case TaskKind::correspondence:
      return "Ground the area in the other image that shares the same semantic or functional "
             "meaning as the area marked by the red bounding box in the first image.";
    case TaskKind::static_difference:
    case TaskKind::robust_difference:
      return "Ground the difference between these two images in the second image.";
    case TaskKind::common_object:
      return "Ground the object these images share in common in every image.";
    default:
      return "Ground the target object.";
  }
}

std::string ordinal_word(std::size_t k) {
  static constexpr std::array<std::string_view, 10> kWords = {
      "first", "second", "third", "fourth", "fifth",
      "sixth", "seventh", "eighth", "ninth", "tenth"};
  if (k >= 1 && k <= kWords.size()) return std::string(kWords[k - 1]);
  const std::size_t mod100 = k % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    if (k % 10 == 1) suffix = "st";
    else if (k % 10 == 2) suffix = "nd";
    else if (k % 10 == 3) suffix = "rd";
  }
  return std::to_string(k) + suffix;
}

}  // namespace migkit

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Prompt templates for the inference strategies and the data-synthesis
// passes. Placeholders are upper-case names in braces:
//   {QUESTION} {RESPONSE} {BOX} {IMAGE_K} {IMAGE_ORD} {IMAGE_CHOICES}

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "migkit/benchdata.hpp"

namespace migkit {

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
  std::string text;
  bool mark_reference = false;  // draw query_regions[0] as a red box
  bool append_format = false;   // append the box-format instruction

  bool operator==(const PromptTemplate&) const = default;
};

/// Substitutes every placeholder; throws ConfigError naming the first one
/// left unbound.
std::string render_template(std::string_view text, const Bindings& bindings);

/// True when `text` still contains a {NAME} marker.
bool has_placeholder(std::string_view text);

class TemplateSet {
 public:
  /// The built-in templates (also shipped as assets/prompts/default.json).
  static TemplateSet builtin();
  static TemplateSet from_json(const Json& j);
  static TemplateSet load(const std::filesystem::path& path);
  Json to_json() const;

  /// Throws ConfigError naming (task, step) when absent.
  const PromptTemplate& get(TaskKind task, std::string_view step) const;
  bool has(TaskKind task, std::string_view step) const;
  void set(TaskKind task, std::string step, PromptTemplate tmpl);
  void erase(TaskKind task, std::string_view step);

  std::string format_suffix;  // box-format instruction
  std::string polling_focus;  // added when one image of many is polled
  std::string all_images;     // added when one request answers for all images
  std::string caption;        // synthesis pass 1
  std::string refine;         // synthesis pass 2
  std::string instruction;    // synthesis pass 3

  bool operator==(const TemplateSet&) const = default;

 private:
  std::map<std::pair<TaskKind, std::string>, PromptTemplate> table_;
};

/// Question used for direct prompting when an instance has no query text.
std::string default_question(TaskKind task);

/// "first", "second", ... ("11th" beyond ten); k is 1-based.
std::string ordinal_word(std::size_t k);

}  // namespace migkit

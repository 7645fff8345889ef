// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Free-form instruction synthesis over image groups: caption each image,
// refine its box annotations, then ask a text model for cross-image Q/A
// pairs whose answers carry box tokens.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "migkit/chat_client.hpp"
#include "migkit/dataforge.hpp"
#include "migkit/prompts.hpp"

namespace migkit {

struct SynthesisStats {
  std::size_t groups = 0;
  std::size_t captions = 0;         // pass 1 successes
  std::size_t refined_objects = 0;  // pass 2 annotations kept
  std::size_t dropped_objects = 0;  // pass 2 annotations the refiner removed
  std::size_t qa_pairs = 0;         // pass 3 pairs parsed
  std::size_t kept = 0;
  std::size_t discarded = 0;        // answers without a token-form box
  std::size_t failed_groups = 0;    // endpoint failure after retries

  Json to_json() const;
};

struct SynthesisOptions {
  TemplateSet templates = TemplateSet::builtin();
  std::filesystem::path image_root;
  std::size_t workers = 1;
};

struct QaPair {
  std::string question;
  std::string answer;
};

/// Splits "Q: ... A: ..." text into pairs; text before the first Q: is
/// ignored.
std::vector<QaPair> parse_qa_pairs(std::string_view text);

/// Annotation lines "caption <|box_start|>(x1,y1),(x2,y2)<|box_end|>" with
/// the box in norm1000.
std::string render_annotations(const AnnotationRecord& rec);

/// Reads the refiner's output back: every token-form box with the text that
/// precedes it on its line.
std::vector<AnnotatedObject> parse_refined(std::string_view text, const AnnotationRecord& rec);

/// Runs the three passes per group. Groups whose requests fail are skipped
/// and counted; output order follows group order.
std::vector<TrainInstance> synthesize_freeform(std::span<const AnnotationRecord> records,
                                               std::span<const std::vector<std::size_t>> groups,
                                               ChatClient& caption_ep, ChatClient& refine_ep,
                                               ChatClient& instruct_ep,
                                               const SynthesisOptions& opts,
                                               SynthesisStats* stats = nullptr);

}  // namespace migkit

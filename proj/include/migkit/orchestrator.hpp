// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Drives a chat endpoint through the direct / single-image CoT / multi-image
// CoT strategies under the polling and all-at-once answering forms.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "migkit/benchdata.hpp"
#include "migkit/chat_client.hpp"
#include "migkit/prompts.hpp"

namespace migkit {

struct EvalOptions {
  Strategy strategy = Strategy::cot_single;
  AnsweringForm form = AnsweringForm::polling;
  TemplateSet templates = TemplateSet::builtin();
  std::filesystem::path image_root;     // resolves relative image paths
  SpaceKind prediction_space = SpaceKind::norm1000;  // coordinates the model answers in
  double hit_threshold = 0.5;
};

/// Images that may hold a target and therefore get polled. Taken from
/// meta.candidate_images, else all images minus meta.reference_images, else
/// a per-task default (image 0 is the reference for tracking, multi-view,
/// referring and correspondence; region_locating searches image 0).
std::vector<std::size_t> candidate_images(const Instance& inst);

/// One request: attached images (in order), the image carrying the drawn
/// reference box, and the prompt text.
struct MessageSpec {
  std::vector<std::size_t> images;
  std::optional<std::size_t> marked_image;
  std::string text;
};

/// Builds the prompt for (task, step) with `extra` bindings layered over the
/// instance-derived ones ({QUESTION}, {BOX}, {IMAGE_ORD}, {IMAGE_CHOICES}).
/// `fragment` (e.g. the polling focus) is rendered with the same bindings and
/// placed before the format suffix. Throws ConfigError when the template is
/// missing or a placeholder stays unbound.
MessageSpec build_message(const Instance& inst, const TemplateSet& templates,
                          std::string_view step, std::vector<std::size_t> images,
                          const Bindings& extra = {}, std::string_view fragment = {});

/// Chat-completions payload with the images as base64 data URLs followed by
/// the text part.
Json render_payload(const Instance& inst, const MessageSpec& msg,
                    const std::filesystem::path& image_root);

/// Convenience: build_message over all images, then render_payload.
Json render_messages(const Instance& inst, const TemplateSet& templates,
                     std::string_view step, const Bindings& extra,
                     const std::filesystem::path& image_root);

/// Runs one instance. Transport failures mark the record failed; a
/// ConfigError (missing template, endpoint rejecting the payload) propagates.
RunRecord run_instance(const Instance& inst, ChatClient& client, const EvalOptions& opts);

struct BatchOptions {
  std::size_t workers = 4;
  std::filesystem::path journal;  // empty: no journal
  Json config = Json::object();   // echoed into a fresh journal header
  /// Stop scheduling after this many newly executed instances (0: no limit).
  std::size_t stop_after = 0;
  std::function<void(const RunRecord&)> on_record;  // called under no lock
};

struct BatchResult {
  std::vector<RunRecord> records;  // dataset order; only instances with records
  std::size_t executed = 0;
  std::size_t resumed = 0;
};

BatchResult run_batch(std::span<const Instance> dataset, ChatClient& client,
                      const EvalOptions& opts, const BatchOptions& batch = {});

}  // namespace migkit

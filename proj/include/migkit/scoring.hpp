// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Acc@0.5 scoring, report comparison and difficulty tiers.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "migkit/benchdata.hpp"

namespace migkit {

inline constexpr double kHitThreshold = 0.5;

struct TargetMatch {
  std::vector<double> best_iou;  // per target: best IoU of any prediction on its image
  std::vector<bool> hit;         // per target: matched by a distinct prediction
  bool all_hit() const;
};

/// Greedy one-to-one matching by descending IoU. A prediction only competes
/// for targets on its own image, is converted into the target's space first,
/// and matches when IoU > threshold.
TargetMatch match_targets(const Instance& inst, std::span<const Region> predictions,
                          double threshold = kHitThreshold);

struct TaskScore {
  std::size_t instances = 0;
  std::size_t hits = 0;
  double accuracy = 0;  // percent

  bool operator==(const TaskScore&) const = default;
};

struct InstanceScore {
  std::string id;
  TaskKind task = TaskKind::freeform;
  bool hit = false;
  bool failed = false;   // missing or transport-failed record
  TargetMatch targets;
};

struct ScoreReport {
  std::map<TaskKind, TaskScore> tasks;  // only tasks present in the dataset
  double macro = 0;                     // unweighted mean over tasks
  double micro = 0;                     // hits / instances over everything
  std::vector<InstanceScore> instances;  // dataset order

  /// Report carrying only per-task accuracies (e.g. transcribed results).
  static ScoreReport from_accuracies(const std::map<TaskKind, double>& accuracies);

  Json to_json() const;
  std::string to_table() const;
};

/// Scores `records` against `dataset`. Instances without a record, and
/// failed records, are misses. Throws ValidationError when a record names an
/// unknown instance or two records share an id.
ScoreReport score(std::span<const RunRecord> records, std::span<const Instance> dataset,
                  double threshold = kHitThreshold);

struct ScoreDelta {
  std::map<TaskKind, double> tasks;  // A - B, percentage points
  double macro = 0;
  Json to_json() const;
};

/// Throws ValidationError when the reports cover different task sets.
ScoreDelta compare(const ScoreReport& a, const ScoreReport& b);

// --- difficulty tiers ----------------------------------------------------------

enum class Tier { easy, medium, hard };
std::string_view to_string(Tier t);

struct TierInputs {
  std::size_t image_count = 0;
  std::vector<bool> correct;        // one flag per reference run
  std::vector<double> iou_cot;      // per reference model, with CoT
  std::vector<double> iou_direct;   // per reference model, without
};

/// Mean over models of iou_cot - iou_direct; 0 when no pairs are given.
double cot_improvement(const TierInputs& in);

/// easy  iff (correct > 2 and images < 4) or improvement > 0.15
/// hard  iff correct <= 1 and images > 4 (and not easy)
/// medium otherwise.
/// Throws ValidationError when `correct` is empty or the IoU vectors differ
/// in length.
Tier tier(const TierInputs& in);

struct TierRun {
  std::span<const RunRecord> direct;
  std::span<const RunRecord> cot;
};

/// Tier per dataset instance from paired direct/CoT runs of the reference
/// models; every run (direct and CoT) contributes one correctness vote, and
/// an instance's IoU is the mean of its per-target best IoUs.
std::map<std::string, Tier> assign_tiers(std::span<const Instance> dataset,
                                         std::span<const TierRun> runs);

}  // namespace migkit

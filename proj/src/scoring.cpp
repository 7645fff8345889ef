// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>

#include "migkit/error.hpp"

namespace migkit {

bool TargetMatch::all_hit() const {
  return !hit.empty() && std::all_of(hit.begin(), hit.end(), [](bool h) { return h; });
}

TargetMatch match_targets(const Instance& inst, std::span<const Region> predictions,
                          double threshold) {
  const std::size_t nt = inst.ground_truth.size();
  TargetMatch m;
  m.best_iou.assign(nt, 0.0);
  m.hit.assign(nt, false);

  struct Pair {
    double iou;
    std::size_t target;
    std::size_t pred;
  };
  std::vector<Pair> pairs;
  std::vector<BBox> converted;
  std::vector<std::size_t> owner;
  std::vector<double> ious;
  for (std::size_t t = 0; t < nt; ++t) {
    const Region& gt = inst.ground_truth[t];
    converted.clear();
    owner.clear();
    for (std::size_t p = 0; p < predictions.size(); ++p) {
      const Region& pr = predictions[p];
      if (pr.image_index != gt.image_index) continue;
      converted.push_back(convert(pr.box, pr.space, gt.space));
      owner.push_back(p);
    }
    ious.assign(converted.size(), 0.0);
    iou_one_to_many(gt.box, converted, ious);
    for (std::size_t i = 0; i < ious.size(); ++i) {
      m.best_iou[t] = std::max(m.best_iou[t], ious[i]);
      if (ious[i] > threshold) pairs.push_back({ious[i], t, owner[i]});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.target != b.target) return a.target < b.target;
    return a.pred < b.pred;
  });
  std::vector<bool> used(predictions.size(), false);
  for (const Pair& p : pairs) {
    if (m.hit[p.target] || used[p.pred]) continue;
    m.hit[p.target] = true;
    used[p.pred] = true;
  }
  return m;
}

namespace {

void finish(ScoreReport& r) {
  double sum = 0;
  std::size_t hits = 0;
  std::size_t total = 0;
  for (auto& [task, ts] : r.tasks) {
    if (ts.instances > 0) {
      ts.accuracy = 100.0 * static_cast<double>(ts.hits) / static_cast<double>(ts.instances);
    }
    sum += ts.accuracy;
    hits += ts.hits;
    total += ts.instances;
  }
  r.macro = r.tasks.empty() ? 0.0 : sum / static_cast<double>(r.tasks.size());
  r.micro = total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

ScoreReport ScoreReport::from_accuracies(const std::map<TaskKind, double>& accuracies) {
  ScoreReport r;
  double sum = 0;
  for (const auto& [task, acc] : accuracies) {
    r.tasks[task] = TaskScore{0, 0, acc};
    sum += acc;
  }
  r.macro = accuracies.empty() ? 0.0 : sum / static_cast<double>(accuracies.size());
  r.micro = r.macro;
  return r;
}

ScoreReport score(std::span<const RunRecord> records, std::span<const Instance> dataset,
                  double threshold) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!index.emplace(dataset[i].id, i).second) {
      throw ValidationError("dataset has duplicate instance id '" + dataset[i].id + "'");
    }
  }
  std::vector<const RunRecord*> by_instance(dataset.size(), nullptr);
  for (const RunRecord& rec : records) {
    const auto it = index.find(rec.instance_id);
    if (it == index.end()) {
      throw ValidationError("record references unknown instance '" + rec.instance_id + "'");
    }
    if (by_instance[it->second] != nullptr) {
      throw ValidationError("more than one record for instance '" + rec.instance_id + "'");
    }
    by_instance[it->second] = &rec;
  }

  ScoreReport r;
  r.instances.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Instance& inst = dataset[i];
    const RunRecord* rec = by_instance[i];
    InstanceScore s;
    s.id = inst.id;
    s.task = inst.task;
    s.failed = rec == nullptr || rec->failed;
    if (s.failed) {
      s.targets.best_iou.assign(inst.ground_truth.size(), 0.0);
      s.targets.hit.assign(inst.ground_truth.size(), false);
    } else {
      s.targets = match_targets(inst, rec->predictions, threshold);
    }
    s.hit = !s.failed && s.targets.all_hit();
    TaskScore& ts = r.tasks[inst.task];
    ++ts.instances;
    if (s.hit) ++ts.hits;
    r.instances.push_back(std::move(s));
  }
  finish(r);
  return r;
}

Json ScoreReport::to_json() const {
  Json tasks_j = Json::object();
  for (const auto& [task, ts] : tasks) {
    tasks_j[std::string(to_string(task))] = {
        {"instances", ts.instances}, {"hits", ts.hits}, {"accuracy", ts.accuracy}};
  }
  Json inst_j = Json::array();
  for (const InstanceScore& s : instances) {
    Json hits = Json::array();
    for (bool h : s.targets.hit) hits.push_back(h);
    inst_j.push_back({{"id", s.id},
                      {"task", std::string(to_string(s.task))},
                      {"hit", s.hit},
                      {"failed", s.failed},
                      {"target_iou", s.targets.best_iou},
                      {"target_hit", hits}});
  }
  return Json{{"tasks", tasks_j}, {"macro", macro}, {"micro", micro}, {"instances", inst_j}};
}

std::string ScoreReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %9s %6s %9s\n", "task", "instances", "hits",
                "acc@0.5");
  out += line;
  for (const auto& [task, ts] : tasks) {
    std::snprintf(line, sizeof line, "%-22s %9zu %6zu %9s\n",
                  std::string(to_string(task)).c_str(), ts.instances, ts.hits,
                  fixed2(ts.accuracy).c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "%-22s %26s\n", "macro", fixed2(macro).c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-22s %26s\n", "micro", fixed2(micro).c_str());
  out += line;
  return out;
}

Json ScoreDelta::to_json() const {
  Json t = Json::object();
  for (const auto& [task, d] : tasks) t[std::string(to_string(task))] = d;
  return Json{{"tasks", t}, {"macro", macro}};
}

ScoreDelta compare(const ScoreReport& a, const ScoreReport& b) {
  std::set<TaskKind> ta;
  std::set<TaskKind> tb;
  for (const auto& [task, _] : a.tasks) ta.insert(task);
  for (const auto& [task, _] : b.tasks) tb.insert(task);
  if (ta != tb) throw ValidationError("reports cover different task sets");
  ScoreDelta d;
  for (const auto& [task, ts] : a.tasks) d.tasks[task] = ts.accuracy - b.tasks.at(task).accuracy;
  d.macro = a.macro - b.macro;
  return d;
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::easy: return "easy";
    case Tier::medium: return "medium";
    case Tier::hard: return "hard";
  }
  return "?";
}

double cot_improvement(const TierInputs& in) {
  if (in.iou_cot.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < in.iou_cot.size(); ++i) sum += in.iou_cot[i] - in.iou_direct[i];
  return sum / static_cast<double>(in.iou_cot.size());
}

Tier tier(const TierInputs& in) {
  if (in.correct.empty()) throw ValidationError("tier inputs need at least one reference run");
  if (in.iou_cot.size() != in.iou_direct.size()) {
    throw ValidationError("tier inputs: CoT and direct IoU lists differ in length");
  }
  const auto n_correct =
      static_cast<std::size_t>(std::count(in.correct.begin(), in.correct.end(), true));
  const bool easy_a = n_correct > 2 && in.image_count < 4;
  const bool easy_b = cot_improvement(in) > 0.15;
  if (easy_a || easy_b) return Tier::easy;
  if (n_correct <= 1 && in.image_count > 4) return Tier::hard;
  return Tier::medium;
}

std::map<std::string, Tier> assign_tiers(std::span<const Instance> dataset,
                                         std::span<const TierRun> runs) {
  if (runs.empty()) throw ValidationError("tiering needs at least one reference model");
  std::vector<ScoreReport> direct;
  std::vector<ScoreReport> cot;
  for (const TierRun& run : runs) {
    direct.push_back(score(run.direct, dataset));
    cot.push_back(score(run.cot, dataset));
  }
  const auto mean_iou = [](const InstanceScore& s) {
    const auto& v = s.targets.best_iou;
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::map<std::string, Tier> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    TierInputs in;
    in.image_count = dataset[i].images.size();
    for (std::size_t m = 0; m < runs.size(); ++m) {
      in.correct.push_back(direct[m].instances[i].hit);
      in.correct.push_back(cot[m].instances[i].hit);
      in.iou_direct.push_back(mean_iou(direct[m].instances[i]));
      in.iou_cot.push_back(mean_iou(cot[m].instances[i]));
    }
    out[dataset[i].id] = tier(in);
  }
  return out;
}

}  // namespace migkit

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// migkit command-line front end.
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error or bad
// usage, 3 endpoint failure (including evaluate runs with failed instances).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "migkit/benchdata.hpp"
#include "migkit/chat_client.hpp"
#include "migkit/dataforge.hpp"
#include "migkit/error.hpp"
#include "migkit/hislicer.hpp"
#include "migkit/journal.hpp"
#include "migkit/kernels/kernels.hpp"
#include "migkit/mergekit.hpp"
#include "migkit/orchestrator.hpp"
#include "migkit/prompts.hpp"
#include "migkit/scoring.hpp"
#include "migkit/synthesis.hpp"

namespace fs = std::filesystem;
using namespace migkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<Instance> load(const fs::path& dataset, const fs::path& image_root, bool check_images,
                           bool allow_unlabeled = false) {
  LoadOptions o;
  o.image_root = image_root;
  o.check_images = check_images;
  o.allow_unlabeled = allow_unlabeled;
  return load_dataset(dataset, o);
}

std::vector<RunRecord> journal_records(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("journal " + path.string() + " does not exist");
  const JournalContents jc = read_journal(path);
  std::vector<RunRecord> out;
  for (const auto& [_, rec] : jc.records) out.push_back(rec);
  if (jc.skipped_lines > 0) {
    std::cerr << "note: skipped " << jc.skipped_lines << " unreadable journal line(s)\n";
  }
  return out;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  fs::path dataset;
  fs::path out;
  fs::path image_root;
  fs::path templates;
  ModelEndpoint endpoint;
  std::string strategy = "cot_single";
  std::string form = "polling";
  std::string pred_space = "norm1000";
  std::size_t limit = 0;
  std::uint64_t seed = 0;
};

Json run_config_json(const EvaluateArgs& a) {
  return Json{{"dataset", a.dataset.string()},
              {"out", a.out.string()},
              {"image_root", a.image_root.string()},
              {"templates", a.templates.empty() ? "builtin" : a.templates.string()},
              {"endpoint",
               {{"base_url", a.endpoint.base_url},
                {"model", a.endpoint.model},
                {"token_set", !a.endpoint.token.empty()},
                {"timeout_s", a.endpoint.timeout_s},
                {"max_attempts", a.endpoint.max_attempts},
                {"backoff_initial_s", a.endpoint.backoff_initial_s},
                {"max_concurrency", a.endpoint.max_concurrency},
                {"max_tokens", a.endpoint.max_tokens}}},
              {"strategy", a.strategy},
              {"form", a.form},
              {"prediction_space", a.pred_space},
              {"concurrency", a.endpoint.max_concurrency},
              {"seed", a.seed},
              {"limit", a.limit},
              {"kernel_isa", kernels::isa_name(kernels::active().isa)}};
}

int cmd_evaluate(const EvaluateArgs& a) {
  EvaluateArgs args = a;
  if (args.endpoint.token.empty()) args.endpoint.token = token_from_env();
  args.endpoint.validate();
  EvalOptions opts;
  opts.strategy = parse_strategy(args.strategy);
  opts.form = parse_answering_form(args.form);
  opts.prediction_space = parse_space_kind(args.pred_space);
  if (!args.templates.empty()) opts.templates = TemplateSet::load(args.templates);
  opts.image_root = args.image_root.empty() ? args.dataset.parent_path() : args.image_root;

  const auto dataset = load(args.dataset, opts.image_root, true);
  const Json config = run_config_json(args);
  fs::create_directories(args.out);
  write_text(args.out / "run_config.json", config.dump(2) + "\n");

  HttpChatClient client(args.endpoint);
  BatchOptions batch;
  batch.workers = args.endpoint.max_concurrency;
  batch.journal = args.out / "journal.jsonl";
  batch.config = config;
  batch.stop_after = args.limit;
  const BatchResult res = run_batch(dataset, client, opts, batch);

  std::size_t failed = 0;
  for (const auto& r : res.records) failed += r.failed ? 1 : 0;
  std::cerr << "executed " << res.executed << ", resumed " << res.resumed << ", failed " << failed
            << "\n";
  if (res.records.size() == dataset.size()) {
    const ScoreReport rep = score(res.records, dataset);
    write_text(args.out / "report.json", rep.to_json().dump(2) + "\n");
    write_text(args.out / "report.txt", rep.to_table());
    std::cout << rep.to_table();
  }
  return failed > 0 ? kExitTransport : kExitOk;
}

// --- score / tier --------------------------------------------------------------

struct ScoreArgs {
  fs::path journal;
  fs::path dataset;
  fs::path out;
  bool json = false;
};

int cmd_score(const ScoreArgs& a) {
  const auto dataset = load(a.dataset, {}, false);
  const auto records = journal_records(a.journal);
  const ScoreReport rep = score(records, dataset);
  if (!a.out.empty()) {
    write_text(a.out / "report.json", rep.to_json().dump(2) + "\n");
    write_text(a.out / "report.txt", rep.to_table());
  }
  std::cout << (a.json ? rep.to_json().dump(2) + "\n" : rep.to_table());
  return kExitOk;
}

struct TierArgs {
  fs::path dataset;
  std::vector<fs::path> direct;
  std::vector<fs::path> cot;
  fs::path out;
};

int cmd_tier(const TierArgs& a) {
  if (a.direct.size() != a.cot.size() || a.direct.empty()) {
    throw ConfigError("tier needs matching --direct/--cot journal pairs, one per reference model");
  }
  const auto dataset = load(a.dataset, {}, false);
  std::vector<std::vector<RunRecord>> direct;
  std::vector<std::vector<RunRecord>> cot;
  for (std::size_t i = 0; i < a.direct.size(); ++i) {
    direct.push_back(journal_records(a.direct[i]));
    cot.push_back(journal_records(a.cot[i]));
  }
  std::vector<TierRun> runs;
  for (std::size_t i = 0; i < direct.size(); ++i) runs.push_back({direct[i], cot[i]});
  const auto tiers = assign_tiers(dataset, runs);
  std::ostringstream out;
  std::map<std::string, std::size_t> counts;
  for (const auto& inst : dataset) {
    const Tier t = tiers.at(inst.id);
    ++counts[std::string(to_string(t))];
    out << Json{{"id", inst.id}, {"tier", std::string(to_string(t))}}.dump() << "\n";
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    write_text(a.out / "tiers.jsonl", out.str());
  }
  for (const auto& [name, n] : counts) std::cerr << name << ": " << n << "\n";
  return kExitOk;
}

// --- forge -------------------------------------------------------------------------

struct ForgeArgs {
  fs::path config;
  fs::path exclude_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t workers = 1;
  fs::path out;
  fs::path image_root;
  // tasks
  fs::path annotations;
  std::string task;
  // groups
  fs::path index;
  std::string mode = "clip_adaptive";
  // synth
  fs::path groups;
  std::string caption_url = "http://127.0.0.1:8000/v1";
  std::string refine_url = "http://127.0.0.1:8000/v1";
  std::string instruct_url = "http://127.0.0.1:8000/v1";
  std::string caption_model = "default";
  std::string refine_model = "default";
  std::string instruct_model = "default";
  // manifest
  int stage = 1;
  std::size_t total = 0;
  std::vector<std::string> sources;
};

ForgeConfig forge_config(const ForgeArgs& a) {
  ForgeConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot open forge config " + a.config.string());
    const Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("forge config is not JSON");
    cfg = ForgeConfig::from_json(j);
  }
  if (!a.exclude_file.empty()) cfg.common_exclude = load_label_list(a.exclude_file);
  if (a.seed_set) cfg.seed = a.seed;
  cfg.workers = a.workers;
  cfg.validate();
  return cfg;
}

int cmd_forge_tasks(const ForgeArgs& a) {
  const ForgeConfig cfg = forge_config(a);
  const auto records = load_annotations(a.annotations);
  ForgeContext ctx{a.image_root.empty() ? a.annotations.parent_path() : a.image_root, a.out};
  ForgeLog log;
  const TaskKind task = parse_task_kind(a.task);
  const auto out = make_task_set(records, task, cfg, ctx, &log);
  fs::create_directories(a.out);
  save_train_instances(a.out / (a.task + ".jsonl"), out);
  Json report{{"task", a.task}, {"config", cfg.to_json()}, {"log", log.to_json()}};
  write_text(a.out / (a.task + ".log.json"), report.dump(2) + "\n");
  std::cerr << a.task << ": " << out.size() << " instances from " << records.size()
            << " records\n";
  return kExitOk;
}

int cmd_forge_groups(const ForgeArgs& a) {
  ForgeConfig cfg = forge_config(a);
  cfg.grouping = parse_grouping_mode(a.mode);
  const EmbeddingIndex index = load_embedding_index(a.index);
  std::vector<std::vector<std::size_t>> groups;
  if (cfg.grouping == GroupingMode::clip_adaptive) {
    groups = adaptive_groups(index, cfg);
  } else if (cfg.grouping == GroupingMode::random) {
    groups = random_groups(index.size(), cfg.group_images, cfg.seed);
  } else {
    throw ConfigError("common_object grouping is built by `forge tasks --task common_object`");
  }
  Json j = Json::array();
  for (const auto& g : groups) {
    Json paths = Json::array();
    for (std::size_t i : g) paths.push_back(index.paths[i]);
    j.push_back(paths);
  }
  fs::create_directories(a.out);
  write_text(a.out / "groups.json", j.dump(2) + "\n");
  std::cerr << groups.size() << " groups over " << index.size() << " images\n";
  return kExitOk;
}

int cmd_forge_synth(const ForgeArgs& a) {
  const auto records = load_annotations(a.annotations);
  std::map<std::string, std::size_t> by_path;
  for (std::size_t i = 0; i < records.size(); ++i) by_path.emplace(records[i].image, i);
  std::ifstream in(a.groups);
  if (!in) throw ConfigError("cannot open groups file " + a.groups.string());
  const Json gj = Json::parse(in, nullptr, false);
  if (!gj.is_array()) throw ConfigError("groups file must be a JSON array of path arrays");
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& g : gj) {
    std::vector<std::size_t> idx;
    for (const auto& p : g) {
      const auto it = by_path.find(p.get<std::string>());
      if (it == by_path.end()) throw ValidationError("group image " + p.dump() + " has no annotation record");
      idx.push_back(it->second);
    }
    groups.push_back(std::move(idx));
  }
  const auto endpoint = [](const std::string& url, const std::string& model) {
    ModelEndpoint e;
    e.base_url = url;
    e.model = model;
    e.token = token_from_env();
    return e;
  };
  HttpChatClient cap(endpoint(a.caption_url, a.caption_model));
  HttpChatClient ref(endpoint(a.refine_url, a.refine_model));
  HttpChatClient ins(endpoint(a.instruct_url, a.instruct_model));
  SynthesisOptions opts;
  opts.image_root = a.image_root.empty() ? a.annotations.parent_path() : a.image_root;
  opts.workers = a.workers;
  SynthesisStats stats;
  const auto out = synthesize_freeform(records, groups, cap, ref, ins, opts, &stats);
  fs::create_directories(a.out);
  save_train_instances(a.out / "freeform.jsonl", out);
  write_text(a.out / "freeform.log.json", stats.to_json().dump(2) + "\n");
  std::cerr << stats.to_json().dump() << "\n";
  return kExitOk;
}

int cmd_forge_manifest(const ForgeArgs& a) {
  std::map<std::string, SourceSet> avail;
  for (const auto& spec : a.sources) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("--source wants name=size or name=@ids.txt");
    const std::string name = spec.substr(0, eq);
    const std::string val = spec.substr(eq + 1);
    SourceSet s;
    if (!val.empty() && val[0] == '@') {
      std::ifstream in(val.substr(1));
      if (!in) throw ConfigError("cannot open id list " + val.substr(1));
      for (std::string line; std::getline(in, line);) {
        if (!line.empty()) s.ids.push_back(line);
      }
      s.size = s.ids.size();
    } else {
      try {
        s.size = std::stoull(val);
      } catch (const std::exception&) {
        throw ConfigError("bad source size '" + val + "'");
      }
    }
    avail[name] = std::move(s);
  }
  const Manifest m = stage_manifest(a.stage, a.total, avail, a.seed);
  fs::create_directories(a.out);
  write_text(a.out / ("stage" + std::to_string(a.stage) + "_manifest.json"), m.to_json().dump(2) + "\n");
  for (const auto& e : m.entries) {
    std::printf("%-16s %-20s %6.2f%% %10zu\n", e.share.type.c_str(), e.share.source.c_str(),
                e.share.percent, e.count);
  }
  return kExitOk;
}

// --- merge / diff / slice / validate ----------------------------------------------------

struct MergeArgs {
  std::vector<fs::path> inputs;
  fs::path output;
  std::vector<double> weights;
};

int cmd_merge(const MergeArgs& a) {
  std::vector<TensorArchive> archives;
  for (const auto& p : a.inputs) archives.push_back(read_archive(p));
  std::optional<std::vector<double>> w;
  if (!a.weights.empty()) w = a.weights;
  const TensorArchive out = merge(archives, w);
  if (a.output.has_parent_path()) fs::create_directories(a.output.parent_path());
  write_archive(a.output, out);
  std::cerr << "merged " << archives.size() << " archives, " << out.tensors.size()
            << " tensors\n";
  return kExitOk;
}

struct DiffArgs {
  fs::path a;
  fs::path b;
  bool json = false;
};

int cmd_diff(const DiffArgs& d) {
  const DiffReport r = diff(read_archive(d.a), read_archive(d.b));
  if (d.json) {
    std::cout << r.to_json().dump(2) << "\n";
  } else {
    for (const auto& t : r.tensors) {
      std::printf("%-40s max_abs %-12.6g l2 %.6g\n", t.name.c_str(), t.max_abs, t.l2);
    }
    std::printf("overall max_abs %.6g\n", r.max_abs);
  }
  return kExitOk;
}

struct SliceArgs {
  fs::path image;
  std::string grid;
  int overlap = 0;
  std::string question;
  fs::path out;
  std::string id;
  std::vector<double> target;
  int max_side = 1024;
};

int cmd_slice(const SliceArgs& a) {
  const auto size = image_io::read_image_size(a.image);
  GridSpec spec = a.grid.empty() ? default_grid(size.width, size.height, a.max_side)
                                 : parse_grid(a.grid);
  spec.overlap = a.overlap;
  const TileGrid grid = slice(size.width, size.height, spec);
  const std::string stem = a.image.stem().string();
  const auto tiles = write_tiles(a.image, grid, a.out / "tiles", stem);
  std::vector<fs::path> rel;
  for (const auto& t : tiles) rel.push_back(fs::relative(t, a.out));
  std::optional<BBox> target;
  if (!a.target.empty()) {
    if (a.target.size() != 4) throw ConfigError("--target wants x1,y1,x2,y2");
    target = BBox::checked(a.target[0], a.target[1], a.target[2], a.target[3]);
  }
  const Instance inst = to_group_instance(a.id.empty() ? stem : a.id, a.question, grid, rel,
                                          fs::absolute(a.image).string(), target);
  const std::string line = to_json(inst).dump();
  write_text(a.out / "instance.jsonl", line + "\n");
  std::cout << line << "\n";
  return kExitOk;
}

struct ValidateArgs {
  fs::path dataset;
  fs::path image_root;
  bool no_image_check = false;
  bool allow_unlabeled = false;
  bool json = false;
};

int cmd_validate(const ValidateArgs& a) {
  const auto dataset = load(a.dataset, a.image_root, !a.no_image_check, a.allow_unlabeled);
  const ValidationReport rep = validate_benchmark(dataset);
  if (a.json) {
    Json f = Json::array();
    for (const auto& x : rep.findings) {
      f.push_back({{"kind", std::string(to_string(x.kind))}, {"id", x.instance_id}, {"detail", x.detail}});
    }
    Json dist = Json::object();
    for (const auto& [t, n] : task_distribution(dataset)) dist[std::string(to_string(t))] = n;
    std::cout << Json{{"instances", dataset.size()}, {"tasks", dist}, {"findings", f}}.dump(2) << "\n";
  } else {
    std::cout << dataset.size() << " instances\n";
    for (const auto& [t, n] : task_distribution(dataset)) {
      std::printf("  %-22s %zu\n", std::string(to_string(t)).c_str(), n);
    }
    for (const auto& x : rep.findings) {
      std::cout << to_string(x.kind) << " " << x.instance_id << ": " << x.detail << "\n";
    }
    std::cout << (rep.clean() ? "clean\n" : std::to_string(rep.findings.size()) + " finding(s)\n");
  }
  return rep.clean() ? kExitOk : kExitValidation;
}

int cmd_templates(const fs::path& out) {
  const std::string text = TemplateSet::builtin().to_json().dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"migkit: multi-image grounding evaluation and data toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file (flags override it)");
  app.set_version_flag("--version", "migkit 0.1.0");

  std::function<int()> action;

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Run a dataset through a chat endpoint");
  evaluate->add_option("--dataset", ev.dataset, "Instance JSONL")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev.out, "Run directory")->required();
  evaluate->add_option("--image-root", ev.image_root, "Root for relative image paths");
  evaluate->add_option("--templates", ev.templates, "Prompt template JSON")->check(CLI::ExistingFile);
  evaluate->add_option("--base-url", ev.endpoint.base_url, "OpenAI-compatible base URL")->capture_default_str();
  evaluate->add_option("--model", ev.endpoint.model, "Model name")->capture_default_str();
  evaluate->add_option("--token", ev.endpoint.token, "Bearer token (default: $MIGKIT_API_KEY or $OPENAI_API_KEY)");
  evaluate->add_option("--timeout", ev.endpoint.timeout_s, "Request timeout, seconds")->capture_default_str();
  evaluate->add_option("--attempts", ev.endpoint.max_attempts, "Tries per request")->capture_default_str();
  evaluate->add_option("--backoff", ev.endpoint.backoff_initial_s, "First retry delay, seconds")->capture_default_str();
  evaluate->add_option("--concurrency", ev.endpoint.max_concurrency, "Max in-flight requests")->capture_default_str();
  evaluate->add_option("--max-tokens", ev.endpoint.max_tokens, "Completion token cap (0: server default)");
  evaluate->add_option("--strategy", ev.strategy, "direct | cot_single | cot_multi")->capture_default_str();
  evaluate->add_option("--form", ev.form, "polling | all")->capture_default_str();
  evaluate->add_option("--pred-space", ev.pred_space, "Coordinates the model answers in: norm1000 | pixel")->capture_default_str();
  evaluate->add_option("--limit", ev.limit, "Stop after this many new instances (0: all)");
  evaluate->add_option("--seed", ev.seed, "Recorded in the run config");
  evaluate->callback([&] { action = [&] { return cmd_evaluate(ev); }; });

  ScoreArgs sc;
  auto* scorecmd = app.add_subcommand("score", "Score a run journal against its dataset");
  scorecmd->add_option("--journal", sc.journal, "Run journal")->required();
  scorecmd->add_option("--dataset", sc.dataset, "Instance JSONL")->required()->check(CLI::ExistingFile);
  scorecmd->add_option("--out", sc.out, "Write report.json and report.txt here");
  scorecmd->add_flag("--json", sc.json, "Print JSON instead of the table");
  scorecmd->callback([&] { action = [&] { return cmd_score(sc); }; });

  TierArgs ti;
  auto* tiercmd = app.add_subcommand("tier", "Assign easy/medium/hard tiers from reference runs");
  tiercmd->add_option("--dataset", ti.dataset, "Instance JSONL")->required()->check(CLI::ExistingFile);
  tiercmd->add_option("--direct", ti.direct, "Direct-prompting journal, one per reference model")->required();
  tiercmd->add_option("--cot", ti.cot, "CoT journal, paired with --direct in order")->required();
  tiercmd->add_option("--out", ti.out, "Write tiers.jsonl here (default: stdout)");
  tiercmd->callback([&] { action = [&] { return cmd_tier(ti); }; });

  ForgeArgs fa;
  auto* forge = app.add_subcommand("forge", "Build training data");
  forge->require_subcommand(1);
  const auto common_forge = [&](CLI::App* c) {
    c->add_option("--forge-config", fa.config, "ForgeConfig JSON")->check(CLI::ExistingFile);
    c->add_option("--seed", fa.seed, "RNG seed")->each([&](const std::string&) { fa.seed_set = true; });
    c->add_option("--workers", fa.workers, "Worker threads")->capture_default_str();
    c->add_option("--out", fa.out, "Output directory")->required();
    c->add_option("--image-root", fa.image_root, "Root for relative image paths");
  };
  auto* ftasks = forge->add_subcommand("tasks", "Apply a task recipe to annotation records");
  common_forge(ftasks);
  ftasks->add_option("--annotations", fa.annotations, "AnnotationRecord JSONL")->required()->check(CLI::ExistingFile);
  ftasks->add_option("--task", fa.task, "Task kind")->required();
  ftasks->add_option("--exclude-file", fa.exclude_file, "Co-occurring labels to exclude (common_object)")
      ->check(CLI::ExistingFile);
  ftasks->callback([&] { action = [&] { return cmd_forge_tasks(fa); }; });

  auto* fgroups = forge->add_subcommand("groups", "Group images for free-form synthesis");
  common_forge(fgroups);
  fgroups->add_option("--index", fa.index, "EmbeddingIndex JSONL")->required()->check(CLI::ExistingFile);
  fgroups->add_option("--mode", fa.mode, "clip_adaptive | random")->capture_default_str();
  fgroups->callback([&] { action = [&] { return cmd_forge_groups(fa); }; });

  auto* fsynth = forge->add_subcommand("synth", "Caption, refine and instruct over image groups");
  common_forge(fsynth);
  fsynth->add_option("--annotations", fa.annotations, "AnnotationRecord JSONL")->required()->check(CLI::ExistingFile);
  fsynth->add_option("--groups", fa.groups, "groups.json from `forge groups`")->required()->check(CLI::ExistingFile);
  fsynth->add_option("--caption-url", fa.caption_url, "Caption endpoint base URL");
  fsynth->add_option("--caption-model", fa.caption_model, "Caption model");
  fsynth->add_option("--refine-url", fa.refine_url, "Refinement endpoint base URL");
  fsynth->add_option("--refine-model", fa.refine_model, "Refinement model");
  fsynth->add_option("--instruct-url", fa.instruct_url, "Instruction endpoint base URL");
  fsynth->add_option("--instruct-model", fa.instruct_model, "Instruction model");
  fsynth->callback([&] { action = [&] { return cmd_forge_synth(fa); }; });

  auto* fman = forge->add_subcommand("manifest", "Stage data-mix manifest");
  common_forge(fman);
  fman->add_option("--stage", fa.stage, "1 or 2")->required();
  fman->add_option("--total", fa.total, "Total examples")->required();
  fman->add_option("--source", fa.sources, "name=size or name=@ids.txt")->required();
  fman->callback([&] { action = [&] { return cmd_forge_manifest(fa); }; });

  MergeArgs mg;
  auto* mergecmd = app.add_subcommand("merge", "Weighted average of tensor archives");
  mergecmd->add_option("inputs", mg.inputs, "Archives")->required()->check(CLI::ExistingFile);
  mergecmd->add_option("-o,--output", mg.output, "Output archive")->required();
  mergecmd->add_option("--weights", mg.weights, "One weight per archive, summing to 1")->delimiter(',');
  mergecmd->callback([&] { action = [&] { return cmd_merge(mg); }; });

  DiffArgs df;
  auto* diffcmd = app.add_subcommand("diff", "Per-tensor differences between two archives");
  diffcmd->add_option("a", df.a, "First archive")->required()->check(CLI::ExistingFile);
  diffcmd->add_option("b", df.b, "Second archive")->required()->check(CLI::ExistingFile);
  diffcmd->add_flag("--json", df.json, "Print JSON");
  diffcmd->callback([&] { action = [&] { return cmd_diff(df); }; });

  SliceArgs sl;
  auto* slicecmd = app.add_subcommand("slice", "Turn a high-resolution image into a group-grounding instance");
  slicecmd->add_option("--image", sl.image, "Source image")->required()->check(CLI::ExistingFile);
  slicecmd->add_option("--grid", sl.grid, "RxC (default: tiles of at most --max-side pixels)");
  slicecmd->add_option("--max-side", sl.max_side, "Tile side limit for the default grid")->capture_default_str();
  slicecmd->add_option("--overlap", sl.overlap, "Overlap in pixels")->capture_default_str();
  slicecmd->add_option("--question", sl.question, "Grounding question")->required();
  slicecmd->add_option("--target", sl.target, "Source-space box x1,y1,x2,y2 for the ground truth")->delimiter(',');
  slicecmd->add_option("--id", sl.id, "Instance id (default: image stem)");
  slicecmd->add_option("--out", sl.out, "Output directory")->required();
  slicecmd->callback([&] { action = [&] { return cmd_slice(sl); }; });

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Load and review a dataset");
  validate->add_option("--dataset", va.dataset, "Instance JSONL")->required()->check(CLI::ExistingFile);
  validate->add_option("--image-root", va.image_root, "Root for relative image paths");
  validate->add_flag("--no-image-check", va.no_image_check, "Do not require image files");
  validate->add_flag("--allow-unlabeled", va.allow_unlabeled, "Accept meta.unlabeled instances");
  validate->add_flag("--json", va.json, "Print JSON");
  validate->callback([&] { action = [&] { return cmd_validate(va); }; });

  fs::path tmpl_out;
  auto* tmpl = app.add_subcommand("templates", "Print the built-in prompt templates as JSON");
  tmpl->add_option("--out", tmpl_out, "Write to a file instead of stdout");
  tmpl->callback([&] { action = [&] { return cmd_templates(tmpl_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return kExitConfig;
  }

  try {
    return action ? action() : kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TransportError& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const Json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

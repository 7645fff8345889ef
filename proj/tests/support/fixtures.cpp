// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <regex>
#include <sstream>

#include "httplib.h"
#include "migkit/error.hpp"
#include "migkit/image_io.hpp"
#include "migkit/kernels/kernels.hpp"
#include "migkit/outparse.hpp"
#include "migkit/prompts.hpp"

namespace migkit::fixtures {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("migkit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

double raster_iou(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2, int by2) {
  const int lo_x = std::min(ax1, bx1), hi_x = std::max(ax2, bx2);
  const int lo_y = std::min(ay1, by1), hi_y = std::max(ay2, by2);
  long inter = 0, uni = 0;
  for (int y = lo_y; y < hi_y; ++y) {
    for (int x = lo_x; x < hi_x; ++x) {
      const bool in_a = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
      const bool in_b = x >= bx1 && x < bx2 && y >= by1 && y < by2;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// --- scripted chat -------------------------------------------------------------------

ChatTurn chat_turn(const Json& payload) {
  ChatTurn t;
  for (const auto& msg : payload.at("messages")) {
    if (msg.value("role", "") != "user") continue;
    const Json& content = msg.at("content");
    if (content.is_string()) {
      t.text += content.get<std::string>();
      continue;
    }
    for (const auto& part : content) {
      const std::string type = part.value("type", "");
      if (type == "image_url") t.image_urls.push_back(part.at("image_url").at("url"));
      if (type == "text") t.text += part.value("text", "");
    }
  }
  return t;
}

ChatReply ScriptedClient::complete(const Json& payload) {
  ++calls_;
  return {responder_(chat_turn(payload)), 0.0};
}

MockChatServer::MockChatServer(Responder r, int delay_ms)
    : server_(std::make_unique<httplib::Server>()), responder_(std::move(r)), delay_ms_(delay_ms) {
  server_->Post(R"(.*/chat/completions)", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
    ++requests_;
    const std::size_t now = ++in_flight_;
    std::size_t peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    int fail = 0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!failures_.empty()) {
        fail = failures_.front();
        failures_.erase(failures_.begin());
      }
    }
    if (fail != 0) {
      res.status = fail;
      res.set_content("{\"error\":\"scripted\"}", "application/json");
    } else {
      const Json payload = Json::parse(req.body, nullptr, false);
      if (payload.is_discarded() || !payload.contains("messages")) {
        res.status = 400;
        res.set_content("{\"error\":\"bad payload\"}", "application/json");
      } else {
        const std::string text = responder_(chat_turn(payload));
        const Json body{{"id", "mock"},
                        {"object", "chat.completion"},
                        {"model", payload.value("model", "mock")},
                        {"choices",
                         Json::array({{{"index", 0},
                                       {"message", {{"role", "assistant"}, {"content", text}}},
                                       {"finish_reason", "stop"}}})}};
        res.set_content(body.dump(), "application/json");
      }
    }
    --in_flight_;
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw Error("mock server could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockChatServer::~MockChatServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockChatServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

void MockChatServer::fail_next(std::vector<int> statuses) {
  std::lock_guard<std::mutex> lock(mu_);
  failures_.insert(failures_.end(), statuses.begin(), statuses.end());
}

// --- scoring ---------------------------------------------------------------------------

namespace {

Region px(std::size_t image, double x1, double y1, double x2, double y2) {
  return {image, BBox{x1, y1, x2, y2}, CoordSpace::pixel(1000, 1000)};
}

Instance square_instance(const std::string& id, TaskKind task, std::size_t n_images,
                         std::vector<Region> gt) {
  Instance inst;
  inst.id = id;
  inst.task = task;
  for (std::size_t i = 0; i < n_images; ++i) {
    inst.images.push_back({id + "_" + std::to_string(i) + ".png", 1000, 1000});
  }
  inst.query_text = "find the target";
  inst.ground_truth = std::move(gt);
  return inst;
}

RunRecord record(const std::string& id, std::vector<Region> preds) {
  RunRecord r;
  r.instance_id = id;
  r.strategy = Strategy::direct;
  r.form = AnsweringForm::all;
  r.predictions = std::move(preds);
  return r;
}

}  // namespace

// Images are 1000x1000 so norm1000 and pixel boxes coincide up to the
// 1000/1000 scale; every IoU below is plain rectangle arithmetic.
ScoringFixture scoring_fixture() {
  ScoringFixture f;
  const auto co = TaskKind::common_object;
  const auto rg = TaskKind::referring_grounding;
  const auto gg = TaskKind::group_grounding;
  const Region a0 = px(0, 0, 0, 100, 100);
  const Region a1 = px(1, 0, 0, 100, 100);

  // common_object: every target must be matched.
  f.dataset.push_back(square_instance("co-1", co, 2, {a0, a1}));
  f.records.push_back(record("co-1", {a0, a1}));  // both exact
  f.dataset.push_back(square_instance("co-2", co, 2, {a0, a1}));
  f.records.push_back(record("co-2", {a0, px(1, 0, 0, 100, 50)}));  // 0.5 on image 1: miss
  f.dataset.push_back(square_instance("co-3", co, 2, {a0, a1}));
  f.records.push_back(record("co-3", {px(0, 0, 0, 100, 60), px(1, 10, 0, 110, 100)}));  // .6, 9/11
  f.dataset.push_back(square_instance("co-4", co, 2, {a0, a1}));
  f.records.push_back(record("co-4", {a0}));  // image 1 unanswered
  f.dataset.push_back(square_instance("co-5", co, 2, {a0, px(0, 200, 200, 300, 300)}));
  f.records.push_back(record("co-5", {px(0, 200, 200, 300, 300), a0}));  // order irrelevant

  // referring_grounding: one target on image 1.
  f.dataset.push_back(square_instance("rg-1", rg, 2, {a1}));
  f.records.push_back(record("rg-1", {a1}));
  f.dataset.push_back(square_instance("rg-2", rg, 2, {a1}));
  f.records.push_back(record("rg-2", {a0}));  // right box, wrong image
  f.dataset.push_back(square_instance("rg-3", rg, 2, {a1}));
  f.records.push_back(record("rg-3", {px(1, 0, 0, 100, 90)}));  // 0.9
  f.dataset.push_back(square_instance("rg-4", rg, 2, {a1}));
  f.records.push_back(record("rg-4", {px(1, 500, 500, 600, 600), a1}));  // decoy plus exact

  // group_grounding: target on image 2 of 3.
  const Region g2 = px(2, 300, 300, 500, 600);
  f.dataset.push_back(square_instance("gg-1", gg, 3, {g2}));
  f.records.push_back(record("gg-1", {{2, BBox{300, 300, 500, 600}, CoordSpace::norm1000()}}));
  f.dataset.push_back(square_instance("gg-2", gg, 3, {g2}));
  RunRecord failed = record("gg-2", {g2});
  failed.failed = true;
  failed.error = "transport error";
  f.records.push_back(failed);  // failed records never count, whatever they hold
  f.dataset.push_back(square_instance("gg-3", gg, 3, {g2}));
  // gg-3 has no record at all.

  f.accuracy = {{co, 60.0}, {rg, 75.0}, {gg, 100.0 / 3.0}};
  f.macro = (60.0 + 75.0 + 100.0 / 3.0) / 3.0;  // 56.11
  f.micro = 100.0 * 7.0 / 12.0;                  // 58.33
  return f;
}

// --- tiers -------------------------------------------------------------------------------

namespace {

TierCase tcase(std::string name, std::size_t images, int n_correct, std::vector<double> cot,
               std::vector<double> direct, Tier expected) {
  TierInputs in;
  in.image_count = images;
  for (int i = 0; i < 4; ++i) in.correct.push_back(i < n_correct);
  in.iou_cot = std::move(cot);
  in.iou_direct = std::move(direct);
  return {std::move(name), std::move(in), expected};
}

}  // namespace

std::vector<TierCase> tier_cases() {
  using T = Tier;
  const std::vector<double> z{0.0, 0.0};
  return {
      tcase("3 correct, 3 images", 3, 3, z, z, T::easy),
      tcase("4 correct, 2 images", 2, 4, z, z, T::easy),
      tcase("3 correct, exactly 4 images", 4, 3, z, z, T::medium),
      tcase("3 correct, 5 images", 5, 3, z, z, T::medium),
      tcase("improvement 0.2, nothing correct", 2, 0, {0.3, 0.3}, {0.1, 0.1}, T::easy),
      tcase("improvement 0.3 with hard counts", 6, 0, {0.5, 0.4}, {0.2, 0.1}, T::easy),
      tcase("improvement 0.3, 1 correct, 5 images", 5, 1, {0.6, 0.6}, {0.3, 0.3}, T::easy),
      tcase("0 correct, 5 images", 5, 0, z, z, T::hard),
      tcase("1 correct, 8 images, improvement 0.1", 8, 1, {0.2, 0.2}, {0.1, 0.1}, T::hard),
      tcase("0 correct, exactly 4 images", 4, 0, z, z, T::medium),
      tcase("improvement exactly 0.15", 3, 2, {0.15, 0.15}, z, T::medium),
      tcase("improvement exactly 0.15 with hard counts", 6, 0, {0.15, 0.15}, z, T::hard),
      tcase("improvement just above 0.15", 6, 0, {0.1500001, 0.1500001}, z, T::easy),
      tcase("2 correct, 3 images", 3, 2, z, z, T::medium),
      tcase("2 correct, 6 images", 6, 2, z, z, T::medium),
      tcase("3 correct, 6 images, CoT regresses", 6, 3, {0.1, 0.1}, {0.5, 0.5}, T::medium),
      tcase("1 correct, exactly 4 images", 4, 1, z, z, T::medium),
      tcase("4 correct, 1 image, CoT regresses", 1, 4, z, {0.2, 0.2}, T::easy),
      tcase("mean improvement 0.175 over mixed models", 5, 0, {0.5, 0.25}, {0.1, 0.3}, T::easy),
      tcase("mean improvement 0.1 over mixed models", 5, 1, {0.4, 0.3}, {0.2, 0.3}, T::hard),
  };
}

std::map<TaskKind, double> published_base_accuracy() {
  const double v[] = {27.84, 38.30, 19.36, 20.73, 11.81, 25.95, 23.23, 58.52, 48.51, 11.97};
  std::map<TaskKind, double> m;
  for (std::size_t i = 0; i < 10; ++i) m[benchmark_tasks()[i]] = v[i];
  return m;
}

std::map<TaskKind, double> published_cot_accuracy() {
  const double v[] = {23.48, 40.43, 63.85, 62.73, 42.71, 24.85, 54.55, 43.29, 51.49, 30.77};
  std::map<TaskKind, double> m;
  for (std::size_t i = 0; i < 10; ++i) m[benchmark_tasks()[i]] = v[i];
  return m;
}

// --- end to end --------------------------------------------------------------------------

namespace {

constexpr int kW = 64;
constexpr int kH = 48;

struct E2ESpec {
  TaskKind task;
  std::size_t images;
  std::vector<std::pair<std::size_t, BBox>> gt;
  std::optional<std::pair<std::size_t, BBox>> query;
  Json meta = Json::object();
};

std::vector<E2ESpec> e2e_specs() {
  const BBox a{10, 10, 30, 30};
  const BBox b{30, 8, 60, 40};
  const BBox q{4, 4, 24, 20};
  return {
      {TaskKind::static_difference, 2, {{1, a}}, std::nullopt},
      {TaskKind::robust_difference, 2, {{1, b}}, std::nullopt},
      {TaskKind::common_object, 3, {{0, a}, {1, b}, {2, a}}, std::nullopt},
      {TaskKind::object_tracking, 4, {{1, a}, {2, b}, {3, a}}, {{0, q}}},
      {TaskKind::multi_view, 3, {{1, b}, {2, a}}, {{0, q}}},
      {TaskKind::region_locating, 2, {{0, b}}, {{1, BBox{0, 0, kW, kH}}},
       Json{{"reference_images", {1}}}},
      {TaskKind::referring_grounding, 2, {{1, a}}, {{0, q}}},
      {TaskKind::group_grounding, 4, {{2, b}}, std::nullopt},
      {TaskKind::reasoning, 3, {{1, a}}, std::nullopt},
      {TaskKind::correspondence, 2, {{1, b}}, {{0, q}}},
  };
}

std::string norm_token(const BBox& px_box) {
  const BBox n = convert(px_box, CoordSpace::pixel(kW, kH), CoordSpace::norm1000());
  return render_box_token(
      BBox{std::round(n.x1), std::round(n.y1), std::round(n.x2), std::round(n.y2)});
}

}  // namespace

EndToEndFixture end_to_end_fixture(const fs::path& dir) {
  EndToEndFixture f;
  fs::create_directories(dir / "img");
  auto url_index = std::make_shared<std::map<std::string, std::pair<std::size_t, std::size_t>>>();
  int colour = 0;
  const auto specs = e2e_specs();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const E2ESpec& s = specs[k];
    Instance inst;
    char id[32];
    std::snprintf(id, sizeof id, "e2e-%02zu", k);
    inst.id = id;
    inst.task = s.task;
    for (std::size_t i = 0; i < s.images; ++i) {
      const std::string rel = "img/" + inst.id + "_" + std::to_string(i) + ".png";
      const auto c = static_cast<std::uint8_t>(8 * colour++);
      image_io::write_solid_image(dir / rel, kW, kH, c, static_cast<std::uint8_t>(255 - c),
                                  static_cast<std::uint8_t>((c * 5) & 0xff));
      inst.images.push_back({rel, kW, kH});
      (*url_index)[image_io::data_url(dir / rel)] = {k, i};
    }
    inst.query_text = "locate the " + std::string(to_string(s.task)) + " target";
    if (s.query) inst.query_regions.push_back({s.query->first, s.query->second, inst.pixel_space(s.query->first)});
    for (const auto& [img, box] : s.gt) inst.ground_truth.push_back({img, box, inst.pixel_space(img)});
    inst.meta = s.meta;
    f.dataset.push_back(std::move(inst));
  }
  f.dataset_path = dir / "dataset.jsonl";
  save_dataset(f.dataset_path, f.dataset);

  const auto dataset = std::make_shared<std::vector<Instance>>(f.dataset);
  const std::string suffix = TemplateSet::builtin().format_suffix;
  f.responder = [url_index, dataset, suffix](const ChatTurn& turn) -> std::string {
    std::optional<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    for (const auto& u : turn.image_urls) {
      const auto it = url_index->find(u);
      if (it != url_index->end()) hits.push_back(it->second);
    }
    if (hits.empty()) return "I cannot see the images.";
    const Instance& inst = (*dataset)[hits.front().first];
    const auto gt_on = [&](std::size_t img) -> std::optional<BBox> {
      for (const auto& g : inst.ground_truth) {
        if (g.image_index == img) return g.box;
      }
      return std::nullopt;
    };
    const bool grounding = turn.text.find(suffix) != std::string::npos;
    if (!grounding) {
      if (inst.task == TaskKind::group_grounding) {
        return "Image-" + std::to_string(inst.ground_truth.front().image_index + 1);
      }
      return "the target object of " + inst.id;
    }
    std::optional<std::size_t> polled;
    if (turn.image_urls.size() == 1) {
      polled = hits.front().second;
    } else {
      std::smatch m;
      static const std::regex focus(R"(in Image-(\d+) only)");
      if (std::regex_search(turn.text, m, focus)) polled = std::stoul(m[1]) - 1;
    }
    if (polled) {
      const auto box = gt_on(*polled);
      return box ? norm_token(*box) : "There is no such object in this image.";
    }
    std::string out;
    for (const auto& g : inst.ground_truth) {
      out += "Image-" + std::to_string(g.image_index + 1) + ": " + norm_token(g.box) + "\n";
    }
    return out;
  };
  return f;
}

// --- forge ---------------------------------------------------------------------------------

RegionFixture region_fixture() {
  RegionFixture f;
  f.record.image = "scene.jpg";
  f.record.width = 1000;
  f.record.height = 800;
  f.record.source = "fixture";
  // (w, h, accepted). Image area 800000: ratio gate is area in [160000, 392000].
  const struct {
    int w, h;
    bool ok;
  } boxes[] = {
      {500, 400, true},    // ratio .25, aspect 1.25
      {60, 40, false},     // ratio .003
      {400, 400, true},    // ratio exactly .2
      {399, 400, false},   // ratio .1995
      {700, 560, true},    // ratio exactly .49
      {701, 560, false},   // ratio .4907
      {400, 800, true},    // aspect exactly .5
      {390, 800, false},   // aspect .4875
      {800, 400, true},    // aspect exactly 2
      {800, 390, false},   // aspect 2.05
      {1000, 800, false},  // whole image
      {900, 100, false},
      {100, 700, false},
      {600, 600, true},    // ratio .45
      {200, 200, false},
      {300, 300, false},
      {750, 600, false},   // ratio .5625
      {450, 500, true},    // aspect .9
      {50, 40, false},
      {1000, 300, false},  // aspect 3.3
      {250, 800, false},   // aspect .3125
      {350, 350, false},
      {700, 700, false},
      {10, 10, false},
      {900, 500, false},
  };
  std::size_t i = 0;
  for (const auto& b : boxes) {
    f.record.objects.push_back({"obj" + std::to_string(i), BBox{0, 0, double(b.w), double(b.h)}, {}});
    if (b.ok) f.expected.push_back(i);
    ++i;
  }
  return f;
}

EmbeddingIndex synthetic_index(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  EmbeddingIndex idx;
  idx.dim = dim;
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0;
    for (auto& x : v) {
      x = g(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double x : v) idx.data.push_back(static_cast<float>(x / norm));
    char name[32];
    std::snprintf(name, sizeof name, "img/%04zu.jpg", i);
    idx.paths.push_back(name);
  }
  return idx;
}

TensorArchive random_archive(std::size_t bytes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-4.0f, 4.0f);
  TensorArchive a;
  a.metadata = {{"format", "fixture"}, {"seed", seed}};
  std::size_t used = 0;
  for (int t = 0; used < bytes; ++t) {
    const std::uint64_t rows = 16 + rng() % 48;
    const std::uint64_t cols = 64 + rng() % 192;
    const std::size_t n = rows * cols;
    char name[32];
    std::snprintf(name, sizeof name, "layers.%03d.weight", t);
    if (t % 3 == 2) {
      std::vector<std::uint16_t> v(n);
      for (auto& x : v) x = kernels::float_to_half(u(rng));
      a.add_f16(name, {rows, cols}, v);
      used += n * 2;
    } else {
      std::vector<float> v(n);
      for (auto& x : v) x = u(rng);
      a.add_f32(name, {rows, cols}, v);
      used += n * 4;
    }
  }
  return a;
}

}  // namespace migkit::fixtures

// --- parser corpus ---------------------------------------------------------------------

namespace migkit::fixtures {

std::vector<std::string> check_parser_corpus(const fs::path& path, std::size_t* checked) {
  std::vector<std::string> failures;
  std::ifstream in(path);
  if (!in) return {"cannot open " + path.string()};
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++n;
    const Json e = Json::parse(line);
    const std::string name = e.at("name");
    const std::string text = e.at("text");
    if (e.contains("expect")) {
      const Json& want = e["expect"];
      const ParsedAnswer got = parse_boxes(text);
      std::vector<std::string> problems;
      if (got.tier != want.at("tier").get<int>()) problems.push_back("tier " + std::to_string(got.tier));
      if (got.flags.names() != want.at("flags").get<std::vector<std::string>>()) {
        problems.push_back("flags " + Json(got.flags.names()).dump());
      }
      const auto& boxes = want.at("boxes");
      if (boxes.size() != got.boxes.size()) {
        problems.push_back(std::to_string(got.boxes.size()) + " boxes");
      } else {
        for (std::size_t i = 0; i < boxes.size(); ++i) {
          const Json& b = boxes[i];
          const ParsedBox& g = got.boxes[i];
          const std::optional<std::size_t> img =
              b[0].is_null() ? std::nullopt : std::optional<std::size_t>(b[0].get<std::size_t>());
          const BBox box{b[1].get<double>(), b[2].get<double>(), b[3].get<double>(), b[4].get<double>()};
          if (g.image_index != img || !(g.box == box)) {
            problems.push_back("box " + std::to_string(i) + " = " + to_string(g.box));
          }
        }
      }
      for (const auto& p : problems) failures.push_back(name + ": " + p);
    } else if (e.contains("expect_choice")) {
      const auto got = parse_image_choice(text, e.at("images").get<std::size_t>());
      const Json& want = e["expect_choice"];
      const bool ok = want.is_null() ? !got.has_value() : (got && *got == want.get<std::size_t>());
      if (!ok) failures.push_back(name + ": choice " + (got ? std::to_string(*got) : "none"));
    } else if (e.contains("expect_referring")) {
      const std::string got = extract_referring(text);
      if (got != e["expect_referring"].get<std::string>()) failures.push_back(name + ": '" + got + "'");
    } else {
      failures.push_back(name + ": entry has no expectation");
    }
  }
  if (checked) *checked = n;
  return failures;
}

std::size_t fuzz_parsers(std::size_t n, std::uint64_t seed, const std::vector<std::string>& seeds) {
  static const std::vector<std::string> pieces = {
      "<|box_start|>", "<|box_end|>", "(", ")", ",", "[", "]", "Image-", "image ", "the second ",
      "picture", "#", "-", "+", ".", "0", "7", "42", "999", "1000", "-3", "1e9", " ", "\n",
      "<|object_ref_start|>", "<|object_ref_end|>", "**", "\"", "Answer:", "3rd", "\xE2\x80\x9C",
      "\xFF", "\x00", "99999999999999999999999999999"};
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    switch (rng() % 3) {
      case 0: {  // token soup
        const std::size_t len = rng() % 24;
        for (std::size_t k = 0; k < len; ++k) s += pieces[rng() % pieces.size()];
        break;
      }
      case 1: {  // mutated corpus entry
        s = seeds.empty() ? std::string("(1,2),(3,4)") : seeds[rng() % seeds.size()];
        const std::size_t edits = 1 + rng() % 4;
        for (std::size_t k = 0; k < edits && !s.empty(); ++k) {
          const std::size_t at = rng() % s.size();
          switch (rng() % 3) {
            case 0: s.erase(at, 1 + rng() % 3); break;
            case 1: s.insert(at, pieces[rng() % pieces.size()]); break;
            default: s[at] = static_cast<char>(rng() & 0xff); break;
          }
        }
        break;
      }
      default: {  // raw bytes
        const std::size_t len = rng() % 64;
        for (std::size_t k = 0; k < len; ++k) s += static_cast<char>(rng() & 0xff);
      }
    }
    try {
      const ParsedAnswer a = parse_boxes(s);
      for (const auto& b : a.boxes) {
        if (!b.box.is_canonical() || b.box.x1 < 0 || b.box.x2 > kNorm1000Max || b.box.y1 < 0 ||
            b.box.y2 > kNorm1000Max) {
          ++bad;
        }
      }
      parse_boxes(s, std::numeric_limits<double>::infinity());
      parse_image_choice(s, 1 + rng() % 12);
      extract_referring(s);
    } catch (...) {
      ++bad;
    }
  }
  return bad;
}

}  // namespace migkit::fixtures

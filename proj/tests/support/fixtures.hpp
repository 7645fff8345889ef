// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the unit tests and the acceptance runner: independent
// oracles, hand-built datasets and a scripted chat-completions server.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "migkit/benchdata.hpp"
#include "migkit/chat_client.hpp"
#include "migkit/dataforge.hpp"
#include "migkit/mergekit.hpp"
#include "migkit/scoring.hpp"

namespace httplib {
class Server;
}

namespace migkit::fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// --- oracles -------------------------------------------------------------------

/// IoU of two integer-corner boxes by counting covered unit cells.
double raster_iou(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2, int by2);

// --- scripted chat ----------------------------------------------------------------

/// The user message of a chat payload, split into attached image URLs and text.
struct ChatTurn {
  std::vector<std::string> image_urls;
  std::string text;
};

ChatTurn chat_turn(const Json& payload);

using Responder = std::function<std::string(const ChatTurn&)>;

/// In-process ChatClient driven by a responder. Thread-safe if the
/// responder is.
class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(Responder r) : responder_(std::move(r)) {}
  ChatReply complete(const Json& payload) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  Responder responder_;
  std::atomic<std::size_t> calls_{0};
};

/// httplib server on 127.0.0.1 answering POST */chat/completions through a
/// responder, optionally after a fixed delay. Tracks the number of requests
/// and the peak number in flight.
class MockChatServer {
 public:
  explicit MockChatServer(Responder r, int delay_ms = 0);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  std::string base_url() const;
  std::size_t requests() const { return requests_.load(); }
  std::size_t peak_in_flight() const { return peak_.load(); }
  /// Status codes to return, in order, before the responder takes over.
  void fail_next(std::vector<int> statuses);

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  Responder responder_;
  int delay_ms_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_{0};
  std::mutex mu_;
  std::vector<int> failures_;
};

// --- parser corpus ---------------------------------------------------------------

/// Runs every entry of the curated corpus (JSONL with "expect",
/// "expect_choice" or "expect_referring") and returns one message per
/// mismatch; `checked` receives the entry count.
std::vector<std::string> check_parser_corpus(const fs::path& path, std::size_t* checked);

/// Feeds `n` generated strings (mutated corpus text, token soup, random
/// bytes) through every parser entry point. Returns the number of inputs
/// that threw or produced a non-canonical box.
std::size_t fuzz_parsers(std::size_t n, std::uint64_t seed, const std::vector<std::string>& seeds);

// --- evaluation fixtures ------------------------------------------------------------

/// Twelve instances over three tasks with journal records whose predictions
/// have hand-computed IoUs.
struct ScoringFixture {
  std::vector<Instance> dataset;
  std::vector<RunRecord> records;
  std::map<TaskKind, double> accuracy;  // percent
  double macro = 0;
  double micro = 0;
};

ScoringFixture scoring_fixture();

struct TierCase {
  std::string name;
  TierInputs inputs;
  Tier expected;
};

/// Twenty hand-labelled cases for the easy/medium/hard rules.
std::vector<TierCase> tier_cases();

/// Published per-task accuracies (benchmark column order) for the 7B base
/// model with and without two-step prompting.
std::map<TaskKind, double> published_base_accuracy();
std::map<TaskKind, double> published_cot_accuracy();

/// Ten single-instance-per-task dataset whose images are distinct solid
/// colours written under `dir`, plus a responder that answers every step
/// correctly by recognising the attached images.
struct EndToEndFixture {
  fs::path dataset_path;
  std::vector<Instance> dataset;
  Responder responder;
};

EndToEndFixture end_to_end_fixture(const fs::path& dir);

// --- forge fixtures --------------------------------------------------------------------

/// 1000x800 image with 25 boxes of which exactly `expected` pass every
/// region gate under the default ForgeConfig.
struct RegionFixture {
  AnnotationRecord record;
  std::vector<std::size_t> expected;  // indices into record.objects
};

RegionFixture region_fixture();

/// `n` unit vectors of dimension `dim` drawn from a seeded Gaussian.
EmbeddingIndex synthetic_index(std::size_t n, std::size_t dim, std::uint64_t seed);

// --- archives ----------------------------------------------------------------------------

/// Mixed f32/f16 archive with roughly `bytes` of payload.
TensorArchive random_archive(std::size_t bytes, std::uint64_t seed);

}  // namespace migkit::fixtures

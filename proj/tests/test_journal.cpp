// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "migkit/error.hpp"
#include "migkit/journal.hpp"

using namespace migkit;
using fixtures::TempDir;

namespace {

RunRecord rec(const std::string& id, bool failed = false) {
  RunRecord r;
  r.instance_id = id;
  r.failed = failed;
  r.predictions = {{0, BBox{1, 2, 3, 4}, CoordSpace::norm1000()}};
  return r;
}

}  // namespace

TEST_SUITE("journal") {

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("append, reopen and resume") {
  TempDir dir("jr");
  const auto fx = fixtures::scoring_fixture();
  const auto path = dir / "j.jsonl";
  {
    Journal j(path, fx.dataset, Json{{"model", "m"}});
    j.append(rec("co-1"));
    j.append(rec("co-2", true));
  }
  {
    Journal j(path, fx.dataset, Json::object());
    CHECK(j.completed("co-1"));
    CHECK_FALSE(j.completed("co-2"));  // failed records run again
    CHECK_FALSE(j.completed("co-3"));
    j.append(rec("co-2"));
  }
  const auto c = read_journal(path);
  CHECK(c.header["config"]["model"] == "m");
  CHECK(c.header["instance_count"] == fx.dataset.size());
  CHECK(c.records.size() == 2);
  CHECK_FALSE(c.records.at("co-2").failed);  // last record wins
  CHECK(c.skipped_lines == 0);
}

TEST_CASE("torn and tampered lines are skipped") {
  TempDir dir("jr");
  const auto fx = fixtures::scoring_fixture();
  const auto path = dir / "j.jsonl";
  {
    Journal j(path, fx.dataset, Json::object());
    j.append(rec("co-1"));
    j.append(rec("co-3"));
  }
  std::string text = fixtures::read_text(path);
  // Tamper with the co-3 record, then leave a torn tail.
  const auto pos = text.rfind("co-3");
  text[pos + 3] = '9';
  text += R"({"kind":"record","sha256":"00)";
  fixtures::write_text(path, text);
  auto c = read_journal(path);
  CHECK(c.records.size() == 1);
  CHECK(c.skipped_lines == 2);
  {
    Journal j(path, fx.dataset, Json::object());  // terminates the torn line
    j.append(rec("co-4"));
  }
  c = read_journal(path);
  CHECK(c.records.count("co-4") == 1);
  CHECK(c.skipped_lines == 2);
}

TEST_CASE("a journal from another dataset is refused") {
  TempDir dir("jr");
  auto fx = fixtures::scoring_fixture();
  const auto path = dir / "j.jsonl";
  { Journal j(path, fx.dataset, Json::object()); }
  fx.dataset.pop_back();
  CHECK_THROWS_WITH_AS(Journal(path, fx.dataset, Json::object()), doctest::Contains("different dataset"),
                       ConfigError);
}

TEST_CASE("fingerprint depends on ids and order") {
  auto fx = fixtures::scoring_fixture();
  const std::string a = dataset_fingerprint(fx.dataset);
  std::swap(fx.dataset[0], fx.dataset[1]);
  CHECK(dataset_fingerprint(fx.dataset) != a);
}

}

// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

// Append-only run journal (JSONL).
//
//   {"kind":"header","dataset_fingerprint":"<sha256>","instance_count":N,"config":{...}}
//   {"kind":"record","sha256":"<sha256 of record.dump()>","record":{...}}
//
// Each record line carries its own checksum; lines that fail to parse or
// verify (e.g. torn by a crash mid-write) are ignored on read. When an id
// appears more than once the last valid record wins.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "migkit/benchdata.hpp"

namespace migkit {

std::string sha256_hex(std::string_view data);

/// sha256 over the instance ids joined by '\n', in dataset order.
std::string dataset_fingerprint(std::span<const Instance> instances);

struct JournalContents {
  Json header;                              // null when the file had none
  std::map<std::string, RunRecord> records;  // last valid record per id
  std::size_t skipped_lines = 0;            // torn or checksum-failing lines
};

/// Reads a journal. A missing file yields empty contents.
JournalContents read_journal(const std::filesystem::path& path);

class Journal {
 public:
  /// Opens `path` for appending. An existing journal must match the
  /// dataset fingerprint and may only name ids from `instances`; otherwise
  /// ConfigError. A fresh journal gets a header echoing `config`.
  Journal(const std::filesystem::path& path, std::span<const Instance> instances,
          const Json& config);

  /// Records already present when the journal was opened.
  const std::map<std::string, RunRecord>& existing() const { return existing_.records; }

  /// True when `id` has a completed (non-failed) record.
  bool completed(const std::string& id) const;

  /// Thread-safe; each line is flushed before returning.
  void append(const RunRecord& rec);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  JournalContents existing_;
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace migkit

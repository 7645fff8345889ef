// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/journal.hpp"

#include <openssl/evp.h>

#include <set>

#include "migkit/error.hpp"

namespace migkit {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string dataset_fingerprint(std::span<const Instance> instances) {
  std::string joined;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (i > 0) joined.push_back('\n');
    joined += instances[i].id;
  }
  return sha256_hex(joined);
}

JournalContents read_journal(const std::filesystem::path& path) {
  JournalContents out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      ++out.skipped_lines;
      continue;
    }
    const std::string kind = j.value("kind", "");
    if (kind == "header") {
      if (out.header.is_null()) out.header = j;
      continue;
    }
    if (kind != "record" || !j.contains("record") || !j.contains("sha256")) {
      ++out.skipped_lines;
      continue;
    }
    if (!j["sha256"].is_string() || sha256_hex(j["record"].dump()) != j["sha256"]) {
      ++out.skipped_lines;
      continue;
    }
    try {
      RunRecord rec = run_record_from_json(j["record"]);
      std::string id = rec.instance_id;
      out.records.insert_or_assign(std::move(id), std::move(rec));
    } catch (const std::exception&) {
      ++out.skipped_lines;
    }
  }
  return out;
}

Journal::Journal(const std::filesystem::path& path, std::span<const Instance> instances,
                 const Json& config)
    : path_(path), existing_(read_journal(path)) {
  const std::string fp = dataset_fingerprint(instances);
  if (!existing_.header.is_null()) {
    if (existing_.header.value("dataset_fingerprint", "") != fp) {
      throw ConfigError("journal " + path.string() + " was written for a different dataset");
    }
  }
  std::set<std::string> ids;
  for (const auto& inst : instances) ids.insert(inst.id);
  for (const auto& [id, rec] : existing_.records) {
    if (!ids.contains(id)) {
      throw ConfigError("journal " + path.string() + " names unknown instance '" + id + "'");
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  // A crash can leave a partial last line; start appends on a fresh line.
  bool needs_newline = false;
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    std::ifstream tail(path, std::ios::binary);
    tail.seekg(-1, std::ios::end);
    needs_newline = tail.get() != '\n';
  }
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) throw ConfigError("cannot open journal " + path.string());
  if (needs_newline) out_ << '\n';
  if (existing_.header.is_null()) {
    const Json header{{"kind", "header"},
                      {"dataset_fingerprint", fp},
                      {"instance_count", instances.size()},
                      {"config", config}};
    out_ << header.dump() << '\n';
    out_.flush();
    existing_.header = header;
  }
}

bool Journal::completed(const std::string& id) const {
  const auto it = existing_.records.find(id);
  return it != existing_.records.end() && !it->second.failed;
}

void Journal::append(const RunRecord& rec) {
  const Json body = to_json(rec);
  const std::string dumped = body.dump();
  const Json line{{"kind", "record"}, {"sha256", sha256_hex(dumped)}, {"record", body}};
  std::lock_guard lock(mu_);
  out_ << line.dump() << '\n';
  out_.flush();
  if (!out_) throw Error("write to journal " + path_.string() + " failed");
}

}  // namespace migkit

// Copyright 2026 The xbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace xbc::ingest {

using Timestamp = std::chrono::sys_seconds;

enum class SourceKind { kFile, kHttp, kExportDump };
enum class FormatHint { kJsonLines, kPlainText };

struct SourceConfig {
  std::string source_id;
  SourceKind kind = SourceKind::kFile;
  std::string location;
  FormatHint format_hint = FormatHint::kJsonLines;
  std::int64_t poll_interval = 0;  // seconds; 0 = one-shot

  // Throws ConfigError on empty id or negative interval.
  void validate() const;
};

struct RawFeedRecord {
  std::uint64_t record_id = 0;
  std::string source_id;
  Timestamp fetched_at{};
  std::string text;
  std::map<std::string, std::string> metadata;
};

struct IngestReport {
  std::string source_id;
  std::size_t records_read = 0;
  std::size_t records_kept = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t malformed_dropped = 0;
};

// FNV-1a 64 of the NFC-normalized UTF-8 bytes of `text`.
std::uint64_t dedup_key(std::string_view text);

std::string format_rfc3339(Timestamp t);
Timestamp parse_rfc3339(std::string_view s);

// Parses one input line. Throws MalformedRecord when the line is not a JSON
// object with a non-empty "text" (json_lines), or is blank (plain_text).
RawFeedRecord parse_feed_record(std::string_view line, std::string_view source_id,
                                Timestamp now,
                                FormatHint format = FormatHint::kJsonLines);

// Append-only JSON-lines corpus. Appends are serialized by an internal
// mutex, so one store may be shared by concurrent ingest_source calls.
class CorpusStore {
 public:
  // Opens (creating if needed) the corpus at `path` and indexes the ids
  // already present.
  explicit CorpusStore(std::filesystem::path path);

  // Returns false if a record with the same id is already stored.
  bool append(const RawFeedRecord& rec);

  bool contains(std::uint64_t id) const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_set<std::uint64_t> ids_;
};

std::string to_json_line(const RawFeedRecord& rec);
RawFeedRecord from_json_line(std::string_view line);
std::vector<RawFeedRecord> load_corpus(const std::filesystem::path& path);

// Reads the whole payload of a source as text lines (file / HTTP GET /
// export dump). Throws SourceUnavailable on I/O or HTTP failure.
std::vector<std::string> fetch_source_lines(const SourceConfig& config);

IngestReport ingest_source(const SourceConfig& config, CorpusStore& sink,
                           Timestamp now);

}  // namespace xbc::ingest

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

#include "xbc/feed_ingest.hpp"

#include <httplib.h>

#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "xbc/errors.hpp"
#include "xbc/hash.hpp"
#include "xbc/text.hpp"

namespace xbc::ingest {

using nlohmann::json;

void SourceConfig::validate() const {
  if (source_id.empty()) throw ConfigError("source_id must be non-empty");
  if (poll_interval < 0)
    throw ConfigError("poll_interval must be >= 0 for source " + source_id);
  if (location.empty())
    throw ConfigError("location must be set for source " + source_id);
}

std::uint64_t dedup_key(std::string_view text) {
  return fnv1a64(text::nfc(text));
}

std::string format_rfc3339(Timestamp t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_rfc3339(std::string_view s) {
  std::tm tm{};
  std::istringstream in{std::string(s)};
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) throw ConfigError("bad RFC 3339 timestamp: " + std::string(s));
  // Only UTC ('Z') is accepted; that is all the corpus writer emits.
  std::string rest;
  in >> rest;
  if (rest != "Z") throw ConfigError("timestamp must be UTC (Z): " + std::string(s));
  return Timestamp{std::chrono::seconds{timegm(&tm)}};
}

static bool has_content(std::string_view s) {
  for (char32_t c : text::to_u32(s))
    if (!text::is_space(c)) return true;
  return false;
}

RawFeedRecord parse_feed_record(std::string_view line, std::string_view source_id,
                                Timestamp now, FormatHint format) {
  RawFeedRecord rec;
  rec.source_id = std::string(source_id);
  rec.fetched_at = now;
  if (format == FormatHint::kPlainText) {
    rec.text = text::trim(line);
  } else {
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
      throw MalformedRecord("line is not a JSON object");
    auto it = j.find("text");
    if (it == j.end() || !it->is_string())
      throw MalformedRecord("missing string field \"text\"");
    rec.text = it->get<std::string>();
    for (auto& [k, v] : j.items()) {
      if (k == "text") continue;
      rec.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  if (!has_content(rec.text)) throw MalformedRecord("empty text");
  rec.record_id = dedup_key(rec.text);
  return rec;
}

std::string to_json_line(const RawFeedRecord& rec) {
  json j;
  j["record_id"] = std::to_string(rec.record_id);
  j["source_id"] = rec.source_id;
  j["fetched_at"] = format_rfc3339(rec.fetched_at);
  j["text"] = rec.text;
  j["metadata"] = rec.metadata;
  return j.dump();
}

RawFeedRecord from_json_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw MalformedRecord("corpus line is not a JSON object");
  try {
    RawFeedRecord rec;
    rec.record_id = std::stoull(j.at("record_id").get<std::string>());
    rec.source_id = j.at("source_id").get<std::string>();
    rec.fetched_at = parse_rfc3339(j.at("fetched_at").get<std::string>());
    rec.text = j.at("text").get<std::string>();
    rec.metadata = j.value("metadata", std::map<std::string, std::string>{});
    return rec;
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("corpus line: ") + e.what());
  }
}

std::vector<RawFeedRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SourceUnavailable("cannot read corpus " + path.string());
  std::vector<RawFeedRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!text::trim(line).empty()) out.push_back(from_json_line(line));
  return out;
}

CorpusStore::CorpusStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    for (const auto& rec : load_corpus(path_)) ids_.insert(rec.record_id);
  } else {
    if (path_.has_parent_path())
      std::filesystem::create_directories(path_.parent_path());
    std::ofstream touch(path_);
    if (!touch) throw SourceUnavailable("cannot create corpus " + path_.string());
  }
}

bool CorpusStore::append(const RawFeedRecord& rec) {
  std::lock_guard lock(mu_);
  if (!ids_.insert(rec.record_id).second) return false;
  std::ofstream out(path_, std::ios::app);
  out << to_json_line(rec) << '\n';
  if (!out) throw SourceUnavailable("cannot append to " + path_.string());
  return true;
}

bool CorpusStore::contains(std::uint64_t id) const {
  std::lock_guard lock(mu_);
  return ids_.count(id) != 0;
}

std::size_t CorpusStore::size() const {
  std::lock_guard lock(mu_);
  return ids_.size();
}

static std::vector<std::string> split_lines(const std::string& body) {
  std::vector<std::string> lines;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

static std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SourceUnavailable("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

static std::string http_get(const std::string& url) {
  static const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw SourceUnavailable("only http:// endpoints are supported: " + url);
  std::size_t slash = url.find('/', scheme.size());
  std::string host = url.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : url.substr(slash);
  httplib::Client cli(host);
  cli.set_connection_timeout(5);
  auto res = cli.Get(path);
  if (!res) throw SourceUnavailable("GET " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw SourceUnavailable("GET " + url + " returned HTTP " + std::to_string(res->status));
  return res->body;
}

// Platform exports arrive either as a JSON array of post objects or as a
// Graph-API style {"data": [...]} page. Posts carry "message" or "text".
static std::vector<std::string> explode_export(const std::string& body,
                                               const std::string& where) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return split_lines(body);  // already JSON-lines
  const json* items = &j;
  if (j.is_object() && j.contains("data")) items = &j["data"];
  if (!items->is_array()) throw SourceUnavailable("unrecognized export layout in " + where);
  std::vector<std::string> lines;
  for (const auto& item : *items) {
    json rec = item;
    if (rec.is_object() && !rec.contains("text") && rec.contains("message")) {
      rec["text"] = rec["message"];
      rec.erase("message");
    }
    lines.push_back(rec.dump());
  }
  return lines;
}

std::vector<std::string> fetch_source_lines(const SourceConfig& config) {
  switch (config.kind) {
    case SourceKind::kFile:
      return split_lines(read_file(config.location));
    case SourceKind::kHttp:
      return split_lines(http_get(config.location));
    case SourceKind::kExportDump:
      return explode_export(read_file(config.location), config.location);
  }
  return {};
}

IngestReport ingest_source(const SourceConfig& config, CorpusStore& sink,
                           Timestamp now) {
  config.validate();
  IngestReport report;
  report.source_id = config.source_id;
  FormatHint format = config.kind == SourceKind::kExportDump
                          ? FormatHint::kJsonLines
                          : config.format_hint;
  for (const auto& line : fetch_source_lines(config)) {
    ++report.records_read;
    RawFeedRecord rec;
    try {
      rec = parse_feed_record(line, config.source_id, now, format);
    } catch (const MalformedRecord&) {
      ++report.malformed_dropped;
      continue;
    }
    if (sink.append(rec))
      ++report.records_kept;
    else
      ++report.duplicates_dropped;
  }
  return report;
}

}  // namespace xbc::ingest

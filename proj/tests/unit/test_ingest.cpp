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

#include <doctest.h>

#include <fstream>
#include <thread>

#include "oracles.hpp"
#include "xbc/errors.hpp"
#include "xbc/feed_ingest.hpp"
#include "xbc/hash.hpp"

using namespace xbc;
using namespace xbc::ingest;

namespace {

const Timestamp kNow = parse_rfc3339("2024-05-01T12:00:00Z");

std::filesystem::path write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
  return p;
}

SourceConfig file_source(const std::string& id, const std::filesystem::path& p,
                         FormatHint fmt = FormatHint::kJsonLines) {
  SourceConfig c;
  c.source_id = id;
  c.kind = SourceKind::kFile;
  c.location = p.string();
  c.format_hint = fmt;
  return c;
}

}  // namespace

TEST_CASE("fnv1a reference values") {
  // Frozen from the reference recurrence (offset basis, prime 0x100000001b3).
  CHECK(dedup_key("") == 14695981039346656037ULL);
  CHECK(dedup_key("a") == 12638187200555641996ULL);
  CHECK(dedup_key("b") == 12638190499090526629ULL);
  CHECK(dedup_key("a") == dedup_key("a"));
  CHECK(dedup_key("a") != dedup_key("b"));
}

TEST_CASE("dedup key is taken after NFC") {
  // U+00E9 vs e + U+0301
  CHECK(dedup_key("caf\xC3\xA9") == dedup_key("cafe\xCC\x81"));
}

TEST_CASE("rfc3339 round trip") {
  CHECK(format_rfc3339(kNow) == "2024-05-01T12:00:00Z");
  CHECK(parse_rfc3339(format_rfc3339(kNow)) == kNow);
  CHECK_THROWS_AS(parse_rfc3339("yesterday"), Error);
}

TEST_CASE("parse_feed_record") {
  auto r = parse_feed_record(R"({"text":"APT41 used spearphishing"})", "certin", kNow);
  CHECK(r.text == "APT41 used spearphishing");
  CHECK(r.source_id == "certin");
  CHECK(r.metadata.empty());
  CHECK(r.fetched_at == kNow);
  CHECK(r.record_id == dedup_key("APT41 used spearphishing"));

  SUBCASE("extra fields land in metadata") {
    auto m = parse_feed_record(R"({"text":"x","published_at":"2024-01-01","n":3})", "s", kNow);
    CHECK(m.metadata.at("published_at") == "2024-01-01");
    CHECK(m.metadata.at("n") == "3");
  }
  SUBCASE("identical text gives identical ids") {
    auto a = parse_feed_record(R"({"text":"same","x":"1"})", "s1", kNow);
    auto b = parse_feed_record(R"({"text":"same","x":"2"})", "s2", kNow);
    CHECK(a.record_id == b.record_id);
  }
  SUBCASE("malformed") {
    CHECK_THROWS_AS(parse_feed_record(R"({"text":""})", "s", kNow), MalformedRecord);
    CHECK_THROWS_AS(parse_feed_record(R"({"body":"x"})", "s", kNow), MalformedRecord);
    CHECK_THROWS_AS(parse_feed_record("{not json", "s", kNow), MalformedRecord);
    CHECK_THROWS_AS(parse_feed_record(R"({"text":5})", "s", kNow), MalformedRecord);
  }
  SUBCASE("plain text lines") {
    auto p = parse_feed_record("raw line", "s", kNow, FormatHint::kPlainText);
    CHECK(p.text == "raw line");
  }
}

TEST_CASE("corpus line round trip keeps 64-bit ids exact") {
  RawFeedRecord r{0xFFFFFFFFFFFFFFF1ULL, "src", kNow, "text \"quoted\"", {{"k", "v"}}};
  auto back = from_json_line(to_json_line(r));
  CHECK(back.record_id == r.record_id);
  CHECK(back.text == r.text);
  CHECK(back.metadata == r.metadata);
  CHECK(back.fetched_at == r.fetched_at);
}

TEST_CASE("ingest_source counting") {
  auto dir = testing::scratch_dir("ingest-count");
  SUBCASE("one duplicate") {
    auto f = write_lines(dir / "a.jsonl", {R"({"text":"one"})", R"({"text":"two"})", R"({"text":"one"})"});
    CorpusStore store(dir / "corpus.jsonl");
    auto rep = ingest_source(file_source("a", f), store, kNow);
    CHECK(rep.records_read == 3);
    CHECK(rep.records_kept == 2);
    CHECK(rep.duplicates_dropped == 1);
    CHECK(rep.malformed_dropped == 0);
  }
  SUBCASE("empty file") {
    auto f = write_lines(dir / "e.jsonl", {});
    CorpusStore store(dir / "corpus.jsonl");
    auto rep = ingest_source(file_source("e", f), store, kNow);
    CHECK(rep.records_read == 0);
    CHECK(rep.records_kept == 0);
  }
  SUBCASE("one malformed") {
    auto f = write_lines(dir / "m.jsonl", {R"({"text":""})", R"({"text":"good"})"});
    CorpusStore store(dir / "corpus.jsonl");
    auto rep = ingest_source(file_source("m", f), store, kNow);
    CHECK(rep.malformed_dropped == 1);
    CHECK(rep.records_kept == 1);
  }
  SUBCASE("missing file") {
    CorpusStore store(dir / "corpus.jsonl");
    CHECK_THROWS_AS(ingest_source(file_source("x", dir / "nope.jsonl"), store, kNow), SourceUnavailable);
  }
}

TEST_CASE("export dumps map message to text") {
  auto dir = testing::scratch_dir("ingest-dump");
  {
    std::ofstream out(dir / "dump.json");
    out << R"({"data":[{"message":"hello there","author":"x"},{"text":"second"}]})";
  }
  SourceConfig c = file_source("dump", dir / "dump.json");
  c.kind = SourceKind::kExportDump;
  CorpusStore store(dir / "corpus.jsonl");
  auto rep = ingest_source(c, store, kNow);
  CHECK(rep.records_kept == 2);
  auto corpus = load_corpus(dir / "corpus.jsonl");
  CHECK(corpus[0].text == "hello there");
  CHECK(corpus[0].metadata.at("author") == "x");
}

TEST_CASE("idempotence, conservation and order independence") {
  auto dir = testing::scratch_dir("ingest-props");
  Rng rng(11);
  std::vector<std::string> a_lines, b_lines;
  for (int i = 0; i < 60; ++i) {
    auto pick = rng.below(5);
    std::string line = pick == 0 ? std::string(R"({"text":""})")
                                 : R"({"text":"item )" + std::to_string(rng.below(40)) + "\"}";
    (i % 2 ? a_lines : b_lines).push_back(line);
  }
  auto fa = write_lines(dir / "a.jsonl", a_lines);
  auto fb = write_lines(dir / "b.jsonl", b_lines);

  CorpusStore s1(dir / "c1.jsonl");
  auto r1 = ingest_source(file_source("a", fa), s1, kNow);
  auto r2 = ingest_source(file_source("b", fb), s1, kNow);
  for (const auto& r : {r1, r2})
    CHECK(r.records_read == r.records_kept + r.duplicates_dropped + r.malformed_dropped);

  const std::size_t size_before = s1.size();
  auto again = ingest_source(file_source("a", fa), s1, kNow);
  CHECK(again.records_kept == 0);
  CHECK(again.duplicates_dropped == r1.records_kept + (r1.duplicates_dropped));
  CHECK(s1.size() == size_before);

  CorpusStore s2(dir / "c2.jsonl");
  ingest_source(file_source("b", fb), s2, kNow);
  ingest_source(file_source("a", fa), s2, kNow);
  auto ids = [](const std::filesystem::path& p) {
    std::set<std::uint64_t> out;
    for (const auto& r : load_corpus(p)) out.insert(r.record_id);
    return out;
  };
  CHECK(ids(dir / "c1.jsonl") == ids(dir / "c2.jsonl"));

  // A reopened store remembers what it holds.
  CorpusStore reopened(dir / "c1.jsonl");
  CHECK(reopened.size() == size_before);
}

TEST_CASE("concurrent appends are serialized") {
  auto dir = testing::scratch_dir("ingest-threads");
  CorpusStore store(dir / "corpus.jsonl");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        RawFeedRecord r;
        r.text = "shared " + std::to_string(i + (t % 2) * 25);
        r.record_id = dedup_key(r.text);
        r.source_id = "t" + std::to_string(t);
        r.fetched_at = kNow;
        store.append(r);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(store.size() == 75);
  CHECK(load_corpus(dir / "corpus.jsonl").size() == 75);
}

TEST_CASE("source config validation") {
  SourceConfig c;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.source_id = "x";
  c.poll_interval = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("second pass over a static source drops exactly what the first kept") {
  auto dir = testing::scratch_dir("ingest-twice");
  auto f = write_lines(dir / "s.jsonl", {R"({"text":"a"})", R"({"text":"b"})", R"({"text":"c"})"});
  CorpusStore store(dir / "corpus.jsonl");
  auto first = ingest_source(file_source("s", f), store, kNow);
  auto second = ingest_source(file_source("s", f), store, kNow);
  CHECK(second.duplicates_dropped == first.records_kept);
  CHECK(second.records_kept == 0);
  CHECK(store.size() == 3);
}

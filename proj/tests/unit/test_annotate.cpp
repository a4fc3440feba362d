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

#include <algorithm>

#include "oracles.hpp"
#include "xbc/annotate.hpp"
#include "xbc/errors.hpp"
#include "xbc/preprocess.hpp"

using namespace xbc;
using namespace xbc::annotate;

namespace {

preprocess::PreprocessedDoc doc_of(const std::string& text) {
  preprocess::PreprocessedDoc d;
  d.normalized_text = preprocess::normalize(text);
  d.tokens = preprocess::tokenize(d.normalized_text);
  return d;
}

Span span(std::size_t s, std::size_t e, std::string type, SpanSource src) {
  return {s, e, std::move(type), src};
}

}  // namespace

TEST_CASE("label schema layout") {
  LabelSchema s;
  CHECK(s.size() == 11);
  CHECK(s.label_name(0) == "O");
  CHECK(s.label_id("B-ACTOR") == 1);
  CHECK(s.label_id("I-ACTOR") == 2);
  CHECK(s.label_id("B-EVENT") == 9);
  CHECK(s.type_of(s.label_id("I-IP")) == s.type_index("IP"));
  CHECK_THROWS_AS(s.label_id("B-PERSON"), LabelOutOfRange);
  CHECK(s.transition_allowed(-1, s.label_id("B-IP")));
  CHECK_FALSE(s.transition_allowed(-1, s.label_id("I-IP")));
  CHECK(s.transition_allowed(s.label_id("B-IP"), s.label_id("I-IP")));
  CHECK_FALSE(s.transition_allowed(s.label_id("B-ACTOR"), s.label_id("I-IP")));
}

TEST_CASE("regex entities") {
  auto d = doc_of("Beacon to 192.168.1.5 and 999.1.1.1 via T1566.001 hash d41d8cd98f00b204e9800998ecf8427e");
  auto spans = tag_regex_entities(d);
  std::vector<std::string> types;
  for (const auto& s : spans) types.push_back(s.entity_type + "@" + std::to_string(s.start_token));
  CHECK(types == std::vector<std::string>{"IP@2", "TECHNIQUE@6", "MALWARE@8"});
  CHECK(is_ipv4("192.168.1.5"));
  CHECK_FALSE(is_ipv4("999.1.1.1"));
  CHECK_FALSE(is_ipv4("1.2.3"));
  CHECK_FALSE(is_ipv4("01234.1.1.1"));
  CHECK(is_technique_id("t1566.001"));
  CHECK(is_technique_id("T1059"));
  CHECK_FALSE(is_technique_id("t15"));
  CHECK_FALSE(is_technique_id("t1566.1"));
}

TEST_CASE("gazetteer tagging") {
  Gazetteer g = {{"apt41", "ACTOR"}};
  auto spans = tag_gazetteer(doc_of("Report: APT41 struck again"), g);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == span(2, 3, "ACTOR", SpanSource::kGazetteer));

  Gazetteer g2 = {{"lazarus", "ACTOR"}, {"lazarus group", "ACTOR"}};
  auto s2 = tag_gazetteer(doc_of("the lazarus group again"), g2);
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].start_token == 1);
  CHECK(s2[0].end_token == 3);

  CHECK(tag_gazetteer(doc_of("anything"), {}).empty());
}

TEST_CASE("resolve_spans priorities") {
  auto r1 = resolve_spans({span(2, 3, "ACTOR", SpanSource::kGazetteer), span(2, 4, "ACTOR", SpanSource::kGold)});
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].source == SpanSource::kGold);

  auto r2 = resolve_spans({span(5, 6, "MALWARE", SpanSource::kGazetteer), span(5, 6, "IP", SpanSource::kRegex)});
  REQUIRE(r2.size() == 1);
  CHECK(r2[0].entity_type == "IP");

  auto r3 = resolve_spans({span(4, 5, "IP", SpanSource::kRegex), span(0, 2, "ACTOR", SpanSource::kGazetteer)});
  CHECK(r3 == std::vector<Span>{span(0, 2, "ACTOR", SpanSource::kGazetteer), span(4, 5, "IP", SpanSource::kRegex)});
}

TEST_CASE("resolve_spans is permutation invariant and overlap free") {
  Rng rng(17);
  const std::vector<std::string> types = {"ACTOR", "IP", "MALWARE"};
  for (int it = 0; it < 500; ++it) {
    std::vector<Span> spans;
    const std::size_t n = rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t s = rng.below(10);
      spans.push_back(span(s, s + 1 + rng.below(3), types[rng.below(3)], static_cast<SpanSource>(rng.below(4))));
    }
    auto base = resolve_spans(spans);
    for (std::size_t i = 1; i < base.size(); ++i) CHECK(base[i - 1].end_token <= base[i].start_token);
    for (int p = 0; p < 5; ++p) {
      rng.shuffle(spans);
      CHECK(resolve_spans(spans) == base);
    }
  }
}

TEST_CASE("to_bio, spans_of, validate_bio") {
  LabelSchema s;
  auto a = s.label_id("B-ACTOR"), ai = s.label_id("I-ACTOR");
  std::vector<Span> one = {span(1, 3, "ACTOR", SpanSource::kModel)};
  CHECK(to_bio(one, 4, s) == std::vector<int>{0, a, ai, 0});
  CHECK(to_bio({}, 3, s) == std::vector<int>{0, 0, 0});
  CHECK_THROWS_AS(to_bio(std::vector<Span>{span(0, 2, "ACTOR", SpanSource::kModel),
                                           span(1, 3, "IP", SpanSource::kModel)}, 4, s),
                  OverlapError);
  CHECK_THROWS_AS(to_bio(std::vector<Span>{span(0, 1, "PERSON", SpanSource::kModel)}, 2, s), LabelOutOfRange);

  auto ip = s.label_id("B-IP"), ipi = s.label_id("I-IP");
  CHECK(validate_bio(std::vector<int>{0, ipi}, s) == std::vector<std::size_t>{1});
  CHECK(validate_bio(std::vector<int>{ip, ipi}, s).empty());
  CHECK(validate_bio(std::vector<int>{}, s).empty());
  CHECK(validate_bio(std::vector<int>{a, ipi}, s) == std::vector<std::size_t>{1});

  // A stray I- still yields a span.
  auto stray = spans_of(std::vector<int>{0, ipi, ipi, a}, s);
  REQUIRE(stray.size() == 2);
  CHECK(stray[0].start_token == 1);
  CHECK(stray[0].end_token == 3);
}

TEST_CASE("BIO round trip on random span sets") {
  LabelSchema s;
  Rng rng(23);
  for (int it = 0; it < 2000; ++it) {
    std::size_t len = rng.below(20);
    auto spans = testing::random_spans(rng, len, s);
    auto labels = to_bio(spans, len, s);
    CHECK(validate_bio(labels, s).empty());
    CHECK(spans_of(labels, s) == spans);
    CHECK(to_bio(spans_of(labels, s), len, s) == labels);
  }
}

TEST_CASE("annotate_doc merges channels and is deterministic") {
  LabelSchema s;
  Gazetteer g = {{"lazarus group", "ACTOR"}, {"breached", "EVENT"}, {"10.0.0.1", "MALWARE"}};
  auto d = doc_of("Lazarus Group breached 10.0.0.1 today");
  auto labels = annotate_doc(d, g, s);
  CHECK(labels == std::vector<int>{s.label_id("B-ACTOR"), s.label_id("I-ACTOR"), s.label_id("B-EVENT"),
                                   s.label_id("B-IP"), 0});
  CHECK(annotate_doc(d, g, s) == labels);

  std::vector<Span> gold = {span(0, 1, "ACTOR", SpanSource::kGold)};
  auto with_gold = annotate_doc(d, g, s, gold);
  CHECK(with_gold[0] == s.label_id("B-ACTOR"));
  CHECK(with_gold[1] == 0);

  LabelSchema narrow({"IP"});
  CHECK(annotate_doc(d, g, narrow) == std::vector<int>{0, 0, 0, narrow.label_id("B-IP"), 0});
}

TEST_CASE("label files round trip") {
  auto dir = testing::scratch_dir("labels-io");
  LabelSchema s;
  std::vector<LabelRecord> recs = {{18446744073709551615ULL, "en", {0, 1, 2, 0}}, {7, "es", {}}};
  write_labels(dir / "l.jsonl", recs, s);
  auto back = read_labels(dir / "l.jsonl", s);
  REQUIRE(back.size() == 2);
  CHECK(back[0].record_id == recs[0].record_id);
  CHECK(back[0].labels == recs[0].labels);
  CHECK(back[1].lang == "es");

  save_schema(dir / "schema.json", s);
  CHECK(load_schema(dir / "schema.json") == s);
}

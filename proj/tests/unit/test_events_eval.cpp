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

#include "oracles.hpp"
#include "xbc/errors.hpp"
#include "xbc/eval.hpp"
#include "xbc/events.hpp"
#include "xbc/preprocess.hpp"

using namespace xbc;

namespace {

const annotate::LabelSchema& schema() {
  static const annotate::LabelSchema s;
  return s;
}

int L(const char* name) { return schema().label_id(name); }

preprocess::PreprocessedDoc doc_of(const std::string& text) {
  preprocess::PreprocessedDoc d;
  d.record_id = 5;
  d.normalized_text = preprocess::normalize(text);
  d.tokens = preprocess::tokenize(d.normalized_text);
  return d;
}

annotate::TaggedSequence seq(std::uint64_t id, std::vector<int> labels, std::string lang = "en") {
  annotate::TaggedSequence s;
  s.record_id = id;
  s.lang = std::move(lang);
  s.token_texts.assign(labels.size(), "w");
  s.labels = std::move(labels);
  return s;
}

}  // namespace

TEST_CASE("nearest-trigger assembly") {
  auto d = doc_of("apt41 then breached over 10.0.0.1");
  auto ev = events::assemble_events(d, std::vector<int>{L("B-ACTOR"), 0, L("B-EVENT"), 0, L("B-IP")}, schema());
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].type == "EVENT");
  REQUIRE(ev[0].trigger);
  CHECK(ev[0].trigger->start == 2);
  CHECK(ev[0].trigger->end == 3);
  CHECK(ev[0].trigger->text == "breached");
  REQUIRE(ev[0].arguments.size() == 2);
  CHECK(ev[0].arguments[0] == events::SpanRef{0, 1, "ACTOR", "apt41"});
  CHECK(ev[0].arguments[1] == events::SpanRef{4, 5, "IP", "10.0.0.1"});

  CHECK(events::assemble_events(d, std::vector<int>(5, 0), schema()).empty());
}

TEST_CASE("equidistant entity goes to the earlier trigger") {
  auto d = doc_of("breached x apt41 x exfiltrated");
  auto ev = events::assemble_events(d, std::vector<int>{L("B-EVENT"), 0, L("B-ACTOR"), 0, L("B-EVENT")}, schema());
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].arguments.size() == 1);
  CHECK(ev[1].arguments.empty());
}

TEST_CASE("entities without a trigger are unanchored") {
  auto d = doc_of("apt41 and 10.0.0.1");
  auto ev = events::assemble_events(d, std::vector<int>{L("B-ACTOR"), 0, L("B-IP")}, schema());
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].type == "UNANCHORED");
  CHECK_FALSE(ev[0].trigger);
  CHECK(ev[0].arguments.size() == 2);
  CHECK(events::to_json(ev[0])["trigger"].is_null());
}

TEST_CASE("span distance") {
  annotate::Span a{0, 2, "A", {}}, b{2, 3, "B", {}}, c{5, 6, "C", {}};
  CHECK(events::span_distance(a, b) == 1);
  CHECK(events::span_distance(b, a) == 1);
  CHECK(events::span_distance(a, c) == 4);
}

TEST_CASE("span_prf basics") {
  auto gold = seq(1, {L("B-ACTOR"), L("I-ACTOR"), 0, L("B-IP")});
  SUBCASE("perfect") {
    std::vector<annotate::TaggedSequence> g = {gold};
    auto r = eval::span_prf(g, g, schema());
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.token_accuracy == 1.0);
  }
  SUBCASE("all O") {
    std::vector<annotate::TaggedSequence> g = {gold}, p = {seq(1, {0, 0, 0, 0})};
    auto r = eval::span_prf(g, p, schema());
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
  }
  SUBCASE("one right one spurious") {
    std::vector<annotate::TaggedSequence> g = {gold};
    std::vector<annotate::TaggedSequence> p = {seq(1, {L("B-ACTOR"), L("I-ACTOR"), L("B-MALWARE"), 0})};
    auto r = eval::span_prf(g, p, schema());
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == 0.5);
    CHECK(r.per_type.at("ACTOR").f1 == 1.0);
    CHECK(r.per_type.at("MALWARE").precision == 0.0);
    CHECK(r.per_type.at("IP").recall == 0.0);
  }
  SUBCASE("misaligned") {
    std::vector<annotate::TaggedSequence> g = {gold}, p = {seq(2, {0, 0, 0, 0})};
    CHECK_THROWS_AS(eval::span_prf(g, p, schema()), AlignmentError);
    p = {seq(1, {0, 0, 0})};
    CHECK_THROWS_AS(eval::span_prf(g, p, schema()), AlignmentError);
  }
  SUBCASE("violations are counted") {
    std::vector<annotate::TaggedSequence> g = {gold}, p = {seq(1, {0, L("I-ACTOR"), 0, L("I-IP")})};
    CHECK(eval::span_prf(g, p, schema()).bio_violations == 2);
  }
}

TEST_CASE("span_prf properties") {
  Rng rng(31);
  for (int it = 0; it < 300; ++it) {
    std::vector<annotate::TaggedSequence> gold, pred;
    for (std::uint64_t i = 0; i < 1 + rng.below(4); ++i) {
      std::size_t len = 1 + rng.below(12);
      gold.push_back(seq(i, annotate::to_bio(testing::random_spans(rng, len, schema()), len, schema()),
                         i % 2 ? "es" : "en"));
      pred.push_back(seq(i, annotate::to_bio(testing::random_spans(rng, len, schema()), len, schema()),
                         i % 2 ? "es" : "en"));
    }
    auto self = eval::span_prf(gold, gold, schema());
    CHECK(self.recall == (self.counts.tp + self.counts.fn == 0 ? 0.0 : 1.0));
    CHECK(self.counts.fp == 0);

    auto r = eval::span_prf(gold, pred, schema());
    eval::Counts sum;
    for (const auto& [t, prf] : r.per_type) sum += prf.counts;
    CHECK(sum == r.counts);
    eval::Counts by_lang;
    for (const auto& [l, prf] : r.per_lang) by_lang += prf.counts;
    CHECK(by_lang == r.counts);

    // Add one spurious span on an all-O stretch, or one correct span.
    auto& p0 = pred[0];
    auto spans = annotate::spans_of(p0.labels, schema());
    for (std::size_t t = 0; t < p0.labels.size(); ++t) {
      if (p0.labels[t] != 0) continue;
      bool gold_here = false;
      for (const auto& s : annotate::spans_of(gold[0].labels, schema()))
        gold_here |= s.start_token == t && s.end_token == t + 1 && s.entity_type == "EVENT";
      if (gold_here || (t + 1 < p0.labels.size() && schema().is_inside(p0.labels[t + 1]))) continue;
      auto more = pred;
      more[0].labels[t] = L("B-EVENT");
      auto r2 = eval::span_prf(gold, more, schema());
      CHECK(r2.precision <= r.precision);
      break;
    }
    auto better = pred;
    better[0].labels = gold[0].labels;
    CHECK(eval::span_prf(gold, better, schema()).recall >= r.recall);
  }
}

TEST_CASE("report JSON round trip") {
  std::vector<annotate::TaggedSequence> g = {seq(1, {L("B-ACTOR"), 0, L("B-IP")})};
  std::vector<annotate::TaggedSequence> p = {seq(1, {L("B-ACTOR"), 0, 0})};
  auto r = eval::span_prf(g, p, schema());
  auto back = eval::report_from_json(eval::to_json(r));
  CHECK(back.f1 == r.f1);
  CHECK(back.counts == r.counts);
  CHECK(back.per_type.at("IP").counts == r.per_type.at("IP").counts);
}

TEST_CASE("accuracy matrix formatting") {
  CHECK(eval::format_percent(0.701) == "70.1%");
  CHECK(eval::format_percent(0.58) == "58%");
  CHECK(eval::format_percent(1.0) == "100%");
  CHECK(eval::format_percent(std::nullopt) == "-");

  std::map<std::string, eval::MetricRow> one = {{"bert-bigru-crf", {{"f1", 0.701}}}};
  auto m = eval::accuracy_matrix(one);
  CHECK(m.variants == std::vector<std::string>{"bert-bigru-crf"});
  CHECK(m.render_text().find("70.1%") != std::string::npos);

  std::map<std::string, eval::MetricRow> two = {{"zeta", {{"f1", 0.5}, {"precision", std::nullopt}}},
                                                {"alpha", {{"f1", 0.25}}}};
  auto m2 = eval::accuracy_matrix(two);
  CHECK(m2.variants == std::vector<std::string>{"alpha", "zeta"});
  auto text = m2.render_text();
  CHECK(text.find('-') != std::string::npos);
  CHECK(text.find("alpha") < text.find("zeta"));
  CHECK(m2.to_json()["rows"].size() == 2);
}

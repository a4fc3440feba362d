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

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "xbc/errors.hpp"
#include "xbc/langid.hpp"

using namespace xbc;
using namespace xbc::langid;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

const std::vector<LanguageProfile>& seed_profiles() {
  static const auto profiles = [] {
    std::map<std::string, std::vector<std::string>> s;
    for (const char* lang : {"en", "ru", "el"})
      s[lang] = read_lines(testing::data_dir() / "langid" / "train" / (std::string(lang) + ".txt"));
    return train_profiles(s);
  }();
  return profiles;
}

ingest::RawFeedRecord rec(std::uint64_t id, std::string text) {
  ingest::RawFeedRecord r;
  r.record_id = id;
  r.text = std::move(text);
  return r;
}

}  // namespace

TEST_CASE("smoothed unigram on a one-word corpus") {
  auto p = train_profiles({{"en", {"aa"}}}, 1);
  REQUIRE(p.size() == 1);
  CHECK(p[0].total_ngrams(1) == 2);
  CHECK(p[0].counts(1).size() == 1);
  CHECK(p[0].log_prob(U"a") == doctest::Approx(0.0));  // log(3/3)
  CHECK(p[0].log_prob(U"b") == doctest::Approx(std::log(1.0 / 3.0)));
}

TEST_CASE("empty training set") {
  CHECK_THROWS_AS(train_profiles({}), EmptyTrainingSet);
  CHECK_THROWS_AS(train_profiles({{"en", {}}}), EmptyTrainingSet);
}

TEST_CASE("smoothed probabilities sum to one per order") {
  for (const auto& p : seed_profiles()) {
    for (int n = 1; n <= p.n_max(); ++n) {
      double sum = 0.0;
      for (const auto& [g, c] : p.counts(n)) sum += std::exp(p.log_prob(g));
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("disjoint scripts give disjoint supports") {
  auto p = train_profiles({{"en", {"hello world"}}, {"ru", {"привет мир"}}});
  for (int n = 1; n <= 3; ++n)
    for (const auto& [g, c] : p[0].counts(n))
      if (g.find(U' ') == std::u32string::npos) CHECK(p[1].counts(n).count(g) == 0);
}

TEST_CASE("detect_language") {
  const auto& profiles = seed_profiles();
  SUBCASE("english sentence") {
    auto v = detect_language("the quick brown fox jumps over", profiles);
    CHECK(v.lang == "en");
    CHECK(v.confidence > 0.5);
    CHECK(v.confidence <= 1.0);
  }
  SUBCASE("too short is und") {
    auto v = detect_language("", profiles);
    CHECK(v.lang == "und");
    CHECK(v.confidence == 0.0);
    CHECK(detect_language("abcd", profiles).lang == "und");
    // Punctuation does not count towards min_chars.
    CHECK(detect_language("!!!!!!!!!!!!!!!! a", profiles).lang == "und");
  }
  SUBCASE("single profile is certain") {
    auto one = train_profiles({{"en", {"some english text"}}});
    auto v = detect_language("совершенно другой язык здесь", one);
    CHECK(v.lang == "en");
    CHECK(v.confidence == 1.0);
  }
  SUBCASE("training samples classify as their own language") {
    for (const char* lang : {"en", "ru", "el"})
      for (const auto& s : read_lines(testing::data_dir() / "langid" / "train" / (std::string(lang) + ".txt")))
        CHECK(detect_language(s, profiles).lang == lang);
  }
  SUBCASE("doubling the text keeps the verdict") {
    for (const char* lang : {"en", "ru", "el"}) {
      for (const auto& s : read_lines(testing::data_dir() / "langid" / "heldout" / (std::string(lang) + ".txt"))) {
        auto a = detect_language(s, profiles);
        auto b = detect_language(s + " " + s, profiles);
        CHECK(a.lang == b.lang);
      }
    }
  }
}

TEST_CASE("segment_by_language") {
  const auto& profiles = seed_profiles();
  std::vector<ingest::RawFeedRecord> corpus = {
      rec(1, "the attackers sent phishing emails to the staff"),
      rec(2, "злоумышленники отправили письма сотрудникам"),
      rec(3, "researchers published a detailed report today"),
      rec(4, "серверы управления размещались у провайдера"),
      rec(5, "backups should be tested regularly"),
      rec(6, "abcd"),
  };
  auto buckets = segment_by_language(corpus, profiles);
  CHECK(buckets["en"] == std::vector<std::uint64_t>{1, 3, 5});
  CHECK(buckets["ru"] == std::vector<std::uint64_t>{2, 4});
  CHECK(buckets["und"] == std::vector<std::uint64_t>{6});
  CHECK(buckets.size() == 3);
  CHECK(segment_by_language({}, profiles).empty());
}

TEST_CASE("partition property and serial/parallel agreement") {
  const auto& profiles = seed_profiles();
  std::vector<ingest::RawFeedRecord> corpus;
  std::uint64_t id = 100;
  for (const char* lang : {"en", "ru", "el"})
    for (const auto& s : read_lines(testing::data_dir() / "langid" / "heldout" / (std::string(lang) + ".txt")))
      corpus.push_back(rec(id++, s));
  corpus.push_back(rec(id++, "x"));
  auto par = segment_by_language(corpus, profiles, 10, Exec::kParallel);
  auto ser = segment_by_language(corpus, profiles, 10, Exec::kSerial);
  CHECK(par == ser);
  std::multiset<std::uint64_t> seen;
  for (const auto& [lang, ids] : par) seen.insert(ids.begin(), ids.end());
  std::multiset<std::uint64_t> expected;
  for (const auto& r : corpus) expected.insert(r.record_id);
  CHECK(seen == expected);
}

TEST_CASE("profiles survive save and load") {
  auto dir = testing::scratch_dir("langid-io");
  save_profiles(dir / "p.json", seed_profiles());
  auto back = load_profiles(dir / "p.json");
  REQUIRE(back.size() == seed_profiles().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].lang() == seed_profiles()[i].lang());
    for (int n = 1; n <= 3; ++n) CHECK(back[i].counts(n) == seed_profiles()[i].counts(n));
  }
  auto v1 = detect_language("the quick brown fox jumps over", back);
  auto v2 = detect_language("the quick brown fox jumps over", seed_profiles());
  CHECK(v1.lang == v2.lang);
  CHECK(v1.confidence == v2.confidence);
}

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
#include <sstream>

#include "oracles.hpp"
#include "xbc/errors.hpp"
#include "xbc/pipeline.hpp"

using namespace xbc;
using namespace xbc::pipeline;
using nlohmann::json;

namespace {

const fs::path kFixture = testing::data_dir() / "fixtures" / "cti";

json fixture_json() { return json::parse(std::ifstream(kFixture / "config.json")); }

PipelineConfig fixture_config(const fs::path& workdir) {
  auto c = parse_config(fixture_json(), kFixture);
  c.workdir = workdir;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const json& j, bool require_all = true) {
  try {
    parse_config(j, kFixture, require_all);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config defaults") {
  json minimal = {{"sources", {{{"source_id", "a"}, {"location", "feed_en.jsonl"}}}},
                  {"langid", {{"profiles", "../../langid/profiles.json"}}},
                  {"resources_dir", "../../resources"},
                  {"schema", "schema.json"},
                  {"gazetteer", "gazetteer.tsv"}};
  auto c = parse_config(minimal, kFixture);
  CHECK(c.train.batch_size == 8);
  CHECK(c.train.learning_rate == 1e-2);
  CHECK(c.embedder.dim == 32);
  CHECK(c.train.epochs == 60);
  CHECK(c.dev_split == 0.2);
  CHECK(c.langid.min_chars == 10);
  CHECK(c.sources[0].location == (kFixture / "feed_en.jsonl").lexically_normal().string());
  CHECK(c.embedder.seed == sub_seed(0, "embed"));
  CHECK(c.train.seed == sub_seed(0, "train"));

  apply_seed(c, 99);
  CHECK(c.embedder.seed == sub_seed(99, "embed"));
}

TEST_CASE("config errors name the field") {
  auto j = fixture_json();
  j["train"]["learnig_rate"] = 0.1;
  CHECK(config_error(j).find("train.learnig_rate") != std::string::npos);

  j = fixture_json();
  j["sources"][1]["localtion"] = "x";
  CHECK(config_error(j).find("sources[1].localtion") != std::string::npos);

  j = fixture_json();
  j.erase("resources_dir");
  CHECK(config_error(j).find("resources_dir") != std::string::npos);

  j = fixture_json();
  j["embedder"]["dim"] = 0;
  CHECK_FALSE(config_error(j).empty());

  j = fixture_json();
  j["train"]["batch_size"] = "eight";
  CHECK(config_error(j).find("train.batch_size") != std::string::npos);

  j = fixture_json();
  j["schema"] = "missing.json";
  CHECK(config_error(j).find("schema") != std::string::npos);

  j = fixture_json();
  j["train"]["optimizer"] = "lbfgs";
  CHECK_FALSE(config_error(j).empty());

  // Partial configs are fine when not everything is required.
  CHECK(config_error(json{{"train", {{"epochs", 3}}}}, false).empty());
  CHECK_FALSE(config_error(json{{"train", {{"epochs", 3}}}}, true).empty());
  CHECK_THROWS_AS(validate_config(kFixture / "nope.json"), ConfigError);
}

TEST_CASE("exit codes per error class") {
  CHECK(exit_code_for(ErrorClass::kConfig) == 2);
  CHECK(exit_code_for(ErrorClass::kIngest) == 10);
  CHECK(exit_code_for(ErrorClass::kEval) == 16);
  std::set<int> codes;
  for (auto c : {ErrorClass::kGeneric, ErrorClass::kConfig, ErrorClass::kIngest, ErrorClass::kLangid,
                 ErrorClass::kPreprocess, ErrorClass::kAnnotate, ErrorClass::kEmbed, ErrorClass::kModel,
                 ErrorClass::kEval})
    codes.insert(exit_code_for(c));
  CHECK(codes.size() == 9);
}

TEST_CASE("end-to-end run, resumption and stage isolation") {
  auto wd = testing::scratch_dir("pipeline-run");
  auto c = fixture_config(wd);
  auto first = run_pipeline(c);
  REQUIRE_MESSAGE(first.exit_code == 0, first.error);
  REQUIRE(first.manifest.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(first.manifest[i].stage == kStages[i]);
  CHECK(first.executed.size() == 7);
  const auto manifest = slurp(wd / "manifest.json");

  auto again = run_pipeline(c);
  CHECK(again.executed.empty());
  CHECK(again.skipped.size() == 7);
  CHECK(slurp(wd / "manifest.json") == manifest);

  fs::remove_all(wd / "eval");
  auto after_eval = run_pipeline(c);
  CHECK(after_eval.executed == std::vector<std::string>{"eval"});
  CHECK(after_eval.skipped.size() == 6);
  CHECK(slurp(wd / "manifest.json") == manifest);

  for (const char* stage : {"preprocess", "train"}) {
    const auto before = slurp(wd / stage / (std::string(stage) == "train" ? "model.json" : "docs.jsonl"));
    fs::remove_all(wd / stage);
    auto r = run_pipeline(c);
    CHECK(r.exit_code == 0);
    CHECK(std::find(r.executed.begin(), r.executed.end(), stage) != r.executed.end());
    CHECK(slurp(wd / stage / (std::string(stage) == "train" ? "model.json" : "docs.jsonl")) == before);
    CHECK(slurp(wd / "manifest.json") == manifest);
  }

  // A different workdir reproduces the same manifest byte for byte.
  auto wd2 = testing::scratch_dir("pipeline-run-2");
  auto c2 = fixture_config(wd2);
  CHECK(run_pipeline(c2).exit_code == 0);
  CHECK(slurp(wd2 / "manifest.json") == manifest);

  // Changing the seed re-trains but leaves upstream stages alone.
  apply_seed(c2, 8);
  auto reseeded = run_pipeline(c2);
  CHECK(std::find(reseeded.skipped.begin(), reseeded.skipped.end(), "annotate") != reseeded.skipped.end());
  CHECK(std::find(reseeded.executed.begin(), reseeded.executed.end(), "train") != reseeded.executed.end());
}

TEST_CASE("a broken source fails with the ingest class") {
  auto wd = testing::scratch_dir("pipeline-broken");
  auto c = fixture_config(wd);
  c.sources[0].location = (kFixture / "does-not-exist.jsonl").string();
  auto r = run_pipeline(c);
  CHECK(r.exit_code == 10);
  CHECK(r.error.find("ingest") == 0);
  CHECK(r.executed.empty());
}

TEST_CASE("stage functions compose outside run") {
  auto wd = testing::scratch_dir("pipeline-stages");
  auto c = fixture_config(wd);
  c.train.epochs = 2;
  auto reports = run_ingest(c.sources, wd / "corpus.jsonl", *c.fetched_at);
  CHECK(reports.size() == 2);
  run_detect_lang(c.langid.profiles, wd / "corpus.jsonl", wd / "lang.json", 10, "en");
  auto manifest = json::parse(std::ifstream(wd / "lang.json"));
  CHECK(manifest["buckets"]["en"].size() == 20);
  CHECK(manifest["buckets"]["es"].size() == 20);
  run_preprocess(wd / "corpus.jsonl", wd / "lang.json", c.resources_dir, wd / "docs");
  run_annotate(wd / "docs", c.gazetteer, std::nullopt, c.schema, wd / "labels.jsonl");
  auto outcome = run_train(wd / "labels.jsonl", wd / "docs", 0.25, c, wd / "m.json");
  CHECK(outcome.dev_ids.size() == 10);
  CHECK(fs::exists(wd / "m.history.jsonl"));
  run_extract(wd / "m.json", wd / "docs", wd / "events.jsonl", wd / "pred.jsonl");
  auto rep = run_eval(wd / "labels.jsonl", wd / "pred.jsonl", c.schema, wd / "m.dev_ids.json", wd / "runs" / "crf.json");
  CHECK(rep.tokens > 0);
  run_eval(wd / "labels.jsonl", wd / "labels.jsonl", c.schema, std::nullopt, wd / "runs" / "gold.json");
  auto matrix = run_report(wd / "runs");
  CHECK(matrix.variants == std::vector<std::string>{"crf", "gold"});
  CHECK_THROWS_AS(run_report(wd / "nothing-here"), Error);
}

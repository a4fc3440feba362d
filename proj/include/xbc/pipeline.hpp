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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "xbc/annotate.hpp"
#include "xbc/embed.hpp"
#include "xbc/errors.hpp"
#include "xbc/eval.hpp"
#include "xbc/feed_ingest.hpp"
#include "xbc/train.hpp"

namespace xbc::pipeline {

namespace fs = std::filesystem;

struct LangidConfig {
  fs::path profiles;
  int min_chars = 10;
  std::string default_lang = "en";  // where "und" records are routed
};

struct PipelineConfig {
  std::vector<ingest::SourceConfig> sources;
  std::optional<ingest::Timestamp> fetched_at;  // fixed ingest clock
  LangidConfig langid;
  fs::path resources_dir;
  fs::path schema;
  fs::path gazetteer;
  std::optional<fs::path> gold;
  embed::EmbedderConfig embedder;
  model::TrainConfig train;
  double dev_split = 0.2;
  std::uint64_t seed = 0;
  fs::path workdir = "work";
  nlohmann::json raw;  // the file as read, for stage input hashing
};

// Parses and checks a JSON config: documented defaults applied, unknown
// keys rejected, relative paths resolved against the file's directory.
// With require_all, every path the full pipeline needs must be present and
// exist. Throws ConfigError naming the offending field path.
PipelineConfig parse_config(const nlohmann::json& j, const fs::path& base_dir, bool require_all = true);
PipelineConfig validate_config(const fs::path& path, bool require_all = true);

// Re-derives the embedder/train seeds after the global seed changes.
void apply_seed(PipelineConfig& config, std::uint64_t seed);

// ---- individual stages (also used by the CLI subcommands) ----

std::vector<ingest::IngestReport> run_ingest(const std::vector<ingest::SourceConfig>& sources,
                                             const fs::path& corpus, ingest::Timestamp now,
                                             bool fresh = false);

void run_detect_lang(const fs::path& profiles, const fs::path& corpus, const fs::path& out_manifest,
                     int min_chars, const std::string& default_lang);

void run_preprocess(const fs::path& corpus, const fs::path& lang_manifest, const fs::path& resources_dir,
                    const fs::path& out_dir);

void run_annotate(const fs::path& docs, const fs::path& gazetteer, const std::optional<fs::path>& gold,
                  const fs::path& schema, const fs::path& out_labels);

// Joins label records with documents through the configured text channel.
std::vector<annotate::TaggedSequence> join_labels(const std::vector<preprocess::PreprocessedDoc>& docs,
                                                  const std::vector<annotate::LabelRecord>& labels,
                                                  embed::TextChannel channel);

struct TrainOutcome {
  model::TrainResult result;
  std::set<std::uint64_t> dev_ids;
};

// Writes the model, <out>.history.jsonl and <out>.dev_ids.json.
TrainOutcome run_train(const fs::path& labels, const fs::path& docs, double dev_split,
                       const PipelineConfig& config, const fs::path& out_model);

void run_extract(const fs::path& model, const fs::path& docs, const fs::path& out_events,
                 const std::optional<fs::path>& out_pred_labels);

eval::EvalReport run_eval(const fs::path& gold, const fs::path& pred, const fs::path& schema,
                          const std::optional<fs::path>& ids, const fs::path& out_report);

// Reads every *.json report under `runs` (variant = file stem).
eval::AccuracyMatrix run_report(const fs::path& runs);

// ---- end-to-end ----

struct ManifestEntry {
  std::string stage;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

struct RunResult {
  int exit_code = 0;
  std::string error;
  std::vector<ManifestEntry> manifest;
  std::vector<std::string> executed;
  std::vector<std::string> skipped;
};

inline const std::vector<std::string> kStages = {"ingest",   "detect-lang", "preprocess", "annotate",
                                                 "train",    "extract",     "eval"};

// Runs every stage in order under config.workdir, skipping stages whose
// recorded input and output hashes still match. Writes manifest.json
// (hashes only) and timings.json (wall_ms per executed stage).
RunResult run_pipeline(const PipelineConfig& config);

int exit_code_for(ErrorClass c);

std::string file_hash(const fs::path& p);

}  // namespace xbc::pipeline

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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xbc/preprocess.hpp"

namespace xbc::annotate {

using LabelId = int;

// Label vocabulary O, B-T0, I-T0, B-T1, I-T1, ... over the entity types.
class LabelSchema {
 public:
  LabelSchema();  // ACTOR, IP, TECHNIQUE, MALWARE, EVENT
  explicit LabelSchema(std::vector<std::string> entity_types);

  const std::vector<std::string>& entity_types() const { return types_; }
  const std::vector<std::string>& label_vocab() const { return vocab_; }
  std::size_t size() const { return vocab_.size(); }

  int type_index(std::string_view type) const;  // -1 if unknown
  LabelId begin_label(int type) const { return 1 + 2 * type; }
  LabelId inside_label(int type) const { return 2 + 2 * type; }
  bool is_begin(LabelId l) const { return l > 0 && l % 2 == 1; }
  bool is_inside(LabelId l) const { return l > 0 && l % 2 == 0; }
  int type_of(LabelId l) const { return l > 0 ? (l - 1) / 2 : -1; }

  LabelId label_id(std::string_view name) const;  // throws LabelOutOfRange
  const std::string& label_name(LabelId l) const;

  // True when `next` may follow `prev` under BIO; prev = -1 means sequence start.
  bool transition_allowed(LabelId prev, LabelId next) const;

  bool operator==(const LabelSchema& o) const { return types_ == o.types_; }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> vocab_;
};

LabelSchema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const LabelSchema& schema);

// Lower value wins in overlap resolution.
enum class SpanSource { kGold = 0, kRegex = 1, kGazetteer = 2, kModel = 3 };

struct Span {
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // exclusive
  std::string entity_type;
  SpanSource source = SpanSource::kModel;

  std::size_t length() const { return end_token - start_token; }
  bool operator==(const Span& o) const = default;
};

struct TaggedSequence {
  std::uint64_t record_id = 0;
  std::string lang;
  std::vector<std::string> token_texts;
  std::vector<LabelId> labels;
};

bool is_ipv4(std::string_view token);
bool is_technique_id(std::string_view token);
bool is_file_hash(std::string_view token);

std::vector<Span> tag_regex_entities(const preprocess::PreprocessedDoc& doc);

// Phrase (normalized, space separated) -> entity type.
using Gazetteer = std::map<std::string, std::string>;
Gazetteer load_gazetteer(const std::filesystem::path& path);

std::vector<Span> tag_gazetteer(const preprocess::PreprocessedDoc& doc, const Gazetteer& gazetteer);

std::vector<Span> resolve_spans(std::vector<Span> spans);

std::vector<LabelId> to_bio(std::span<const Span> spans, std::size_t seq_len,
                            const LabelSchema& schema);

// Decodes BIO labels into spans. An I-X that does not continue a span of
// type X opens a new span, so malformed predictions still yield spans.
std::vector<Span> spans_of(std::span<const LabelId> labels, const LabelSchema& schema,
                           SpanSource source = SpanSource::kModel);

// Indices i where labels[i] = I-X does not follow B-X or I-X.
std::vector<std::size_t> validate_bio(std::span<const LabelId> labels, const LabelSchema& schema);

// Silver spans from regex + gazetteer, merged with optional gold spans.
std::vector<LabelId> annotate_doc(const preprocess::PreprocessedDoc& doc, const Gazetteer& gazetteer,
                                  const LabelSchema& schema,
                                  std::span<const Span> gold_spans = {});

// Label file: JSON-lines {record_id, lang, labels: [names]}.
struct LabelRecord {
  std::uint64_t record_id = 0;
  std::string lang;
  std::vector<LabelId> labels;
};

void write_labels(const std::filesystem::path& path, std::span<const LabelRecord> records,
                  const LabelSchema& schema);
std::vector<LabelRecord> read_labels(const std::filesystem::path& path, const LabelSchema& schema);

}  // namespace xbc::annotate

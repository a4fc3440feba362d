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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xbc/annotate.hpp"
#include "xbc/preprocess.hpp"
#include "xbc/sequence_model.hpp"

namespace xbc::events {

inline constexpr const char* kEventType = "EVENT";
inline constexpr const char* kUnanchored = "UNANCHORED";

struct SpanRef {
  std::size_t start = 0, end = 0;  // token indices, end exclusive
  std::string type;
  std::string text;
  bool operator==(const SpanRef&) const = default;
};

struct EventRecord {
  std::uint64_t record_id = 0;
  std::string type;                // EVENT or UNANCHORED
  std::optional<SpanRef> trigger;  // empty for UNANCHORED
  std::vector<SpanRef> arguments;
};

// Token gap between two disjoint spans (adjacent spans are 1 apart).
std::size_t span_distance(const annotate::Span& a, const annotate::Span& b);

// Turns decoded labels into events: one per EVENT span; every other entity
// attaches to the nearest trigger (ties -> earlier trigger). Entities with
// no trigger in the document form one UNANCHORED record.
std::vector<EventRecord> assemble_events(const preprocess::PreprocessedDoc& doc,
                                         std::span<const int> labels,
                                         const annotate::LabelSchema& schema);

std::vector<EventRecord> extract_events(const preprocess::PreprocessedDoc& doc,
                                        const model::SequenceModel& model);

nlohmann::json to_json(const EventRecord& e);

}  // namespace xbc::events

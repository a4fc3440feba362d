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

#include "xbc/events.hpp"

#include "xbc/embed.hpp"

namespace xbc::events {

using nlohmann::json;

std::size_t span_distance(const annotate::Span& a, const annotate::Span& b) {
  if (a.end_token <= b.start_token) return b.start_token - a.end_token + 1;
  if (b.end_token <= a.start_token) return a.start_token - b.end_token + 1;
  return 0;
}

static SpanRef ref(const annotate::Span& s, const preprocess::PreprocessedDoc& doc) {
  SpanRef r{s.start_token, s.end_token, s.entity_type, {}};
  for (std::size_t i = s.start_token; i < s.end_token && i < doc.tokens.size(); ++i) {
    if (i > s.start_token) r.text += ' ';
    r.text += doc.tokens[i].surface;
  }
  return r;
}

std::vector<EventRecord> assemble_events(const preprocess::PreprocessedDoc& doc,
                                         std::span<const int> labels,
                                         const annotate::LabelSchema& schema) {
  std::vector<annotate::Span> triggers, entities;
  for (auto& s : annotate::spans_of(labels, schema))
    (s.entity_type == kEventType ? triggers : entities).push_back(std::move(s));

  std::vector<EventRecord> out;
  if (triggers.empty()) {
    if (entities.empty()) return out;
    EventRecord e;
    e.record_id = doc.record_id;
    e.type = kUnanchored;
    for (const auto& s : entities) e.arguments.push_back(ref(s, doc));
    out.push_back(std::move(e));
    return out;
  }
  for (const auto& t : triggers) {
    EventRecord e;
    e.record_id = doc.record_id;
    e.type = kEventType;
    e.trigger = ref(t, doc);
    out.push_back(std::move(e));
  }
  for (const auto& s : entities) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < triggers.size(); ++k)
      if (span_distance(s, triggers[k]) < span_distance(s, triggers[best])) best = k;
    out[best].arguments.push_back(ref(s, doc));
  }
  return out;
}

std::vector<EventRecord> extract_events(const preprocess::PreprocessedDoc& doc,
                                        const model::SequenceModel& model) {
  if (doc.tokens.empty()) return {};
  auto texts = embed::channel_texts(doc, model.embedder_config().text_channel);
  return assemble_events(doc, model.decode(texts), model.schema());
}

json to_json(const EventRecord& e) {
  auto span_json = [](const SpanRef& s) {
    return json{{"type", s.type}, {"start", s.start}, {"end", s.end}, {"text", s.text}};
  };
  json args = json::array();
  for (const auto& a : e.arguments) args.push_back(span_json(a));
  return {{"record_id", std::to_string(e.record_id)},
          {"type", e.type},
          {"trigger", e.trigger ? span_json(*e.trigger) : json(nullptr)},
          {"arguments", args}};
}

}  // namespace xbc::events

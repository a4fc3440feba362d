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

#include "xbc/annotate.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "xbc/errors.hpp"
#include "xbc/text.hpp"

namespace xbc::annotate {

using nlohmann::json;

LabelSchema::LabelSchema() : LabelSchema({"ACTOR", "IP", "TECHNIQUE", "MALWARE", "EVENT"}) {}

LabelSchema::LabelSchema(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
  vocab_.push_back("O");
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (types_[i].empty()) throw ConfigError("entity type names must be non-empty");
    for (std::size_t j = 0; j < i; ++j)
      if (types_[j] == types_[i]) throw ConfigError("duplicate entity type " + types_[i]);
    vocab_.push_back("B-" + types_[i]);
    vocab_.push_back("I-" + types_[i]);
  }
}

int LabelSchema::type_index(std::string_view type) const {
  for (std::size_t i = 0; i < types_.size(); ++i)
    if (types_[i] == type) return static_cast<int>(i);
  return -1;
}

LabelId LabelSchema::label_id(std::string_view name) const {
  for (std::size_t i = 0; i < vocab_.size(); ++i)
    if (vocab_[i] == name) return static_cast<LabelId>(i);
  throw LabelOutOfRange("unknown label " + std::string(name));
}

const std::string& LabelSchema::label_name(LabelId l) const {
  if (l < 0 || static_cast<std::size_t>(l) >= vocab_.size())
    throw LabelOutOfRange("label id " + std::to_string(l));
  return vocab_[l];
}

bool LabelSchema::transition_allowed(LabelId prev, LabelId next) const {
  if (!is_inside(next)) return true;
  return prev > 0 && type_of(prev) == type_of(next);
}

LabelSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read schema " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("entity_types"))
    throw ConfigError("schema must be a JSON object with \"entity_types\": " + path.string());
  return LabelSchema(j["entity_types"].get<std::vector<std::string>>());
}

void save_schema(const std::filesystem::path& path, const LabelSchema& schema) {
  std::ofstream out(path);
  out << json{{"entity_types", schema.entity_types()}}.dump() << '\n';
}

bool is_ipv4(std::string_view s) {
  int parts = 0;
  std::size_t i = 0;
  while (true) {
    std::size_t digits = 0;
    int value = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9' && digits < 4) {
      value = value * 10 + (s[i] - '0');
      ++i;
      ++digits;
    }
    if (digits == 0 || digits > 3 || value > 255) return false;
    ++parts;
    if (i == s.size()) return parts == 4;
    if (s[i] != '.' || parts == 4) return false;
    ++i;
  }
}

bool is_technique_id(std::string_view s) {
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (s.size() != 5 && s.size() != 9) return false;
  if (s[0] != 't' && s[0] != 'T') return false;
  for (std::size_t i = 1; i < 5; ++i)
    if (!digit(s[i])) return false;
  if (s.size() == 9) {
    if (s[5] != '.') return false;
    for (std::size_t i = 6; i < 9; ++i)
      if (!digit(s[i])) return false;
  }
  return true;
}

bool is_file_hash(std::string_view s) {
  if (s.size() != 32 && s.size() != 40 && s.size() != 64) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

std::vector<Span> tag_regex_entities(const preprocess::PreprocessedDoc& doc) {
  std::vector<Span> out;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const std::string& t = doc.tokens[i].normalized;
    const char* type = nullptr;
    if (is_ipv4(t)) type = "IP";
    else if (is_technique_id(t)) type = "TECHNIQUE";
    else if (is_file_hash(t)) type = "MALWARE";
    if (type) out.push_back({i, i + 1, type, SpanSource::kRegex});
  }
  return out;
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read gazetteer " + path.string());
  Gazetteer g;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("gazetteer line lacks a TAB: " + line);
    std::string phrase = preprocess::normalize(line.substr(0, tab));
    std::string type = text::trim(line.substr(tab + 1));
    if (phrase.empty() || type.empty()) throw ConfigError("empty gazetteer entry: " + line);
    g[phrase] = type;
  }
  return g;
}

std::vector<Span> tag_gazetteer(const preprocess::PreprocessedDoc& doc, const Gazetteer& gazetteer) {
  std::vector<Span> out;
  if (gazetteer.empty()) return out;
  // Bucket phrases by first token, longest first.
  std::map<std::string, std::vector<std::pair<std::vector<std::string>, std::string>>> by_first;
  for (const auto& [phrase, type] : gazetteer) {
    auto toks = text::split_ws(phrase);
    if (toks.empty()) continue;
    by_first[toks[0]].emplace_back(std::move(toks), type);
  }
  for (auto& [k, v] : by_first)
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  const auto& toks = doc.tokens;
  std::size_t i = 0;
  while (i < toks.size()) {
    auto it = by_first.find(toks[i].normalized);
    std::size_t matched = 0;
    const std::string* type = nullptr;
    if (it != by_first.end()) {
      for (const auto& [phrase, t] : it->second) {
        if (i + phrase.size() > toks.size()) continue;
        bool ok = true;
        for (std::size_t k = 1; k < phrase.size() && ok; ++k)
          ok = toks[i + k].normalized == phrase[k];
        if (ok) {
          matched = phrase.size();
          type = &t;
          break;
        }
      }
    }
    if (matched) {
      out.push_back({i, i + matched, *type, SpanSource::kGazetteer});
      i += matched;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<Span> resolve_spans(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    if (a.source != b.source) return a.source < b.source;
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.start_token != b.start_token) return a.start_token < b.start_token;
    return a.entity_type < b.entity_type;
  });
  std::vector<Span> kept;
  for (auto& s : spans) {
    bool clash = std::any_of(kept.begin(), kept.end(), [&](const Span& k) {
      return s.start_token < k.end_token && k.start_token < s.end_token;
    });
    if (!clash) kept.push_back(std::move(s));
  }
  std::sort(kept.begin(), kept.end(),
            [](const Span& a, const Span& b) { return a.start_token < b.start_token; });
  return kept;
}

std::vector<LabelId> to_bio(std::span<const Span> spans, std::size_t seq_len,
                            const LabelSchema& schema) {
  std::vector<LabelId> labels(seq_len, 0);
  std::vector<bool> used(seq_len, false);
  for (const auto& s : spans) {
    if (s.start_token >= s.end_token || s.end_token > seq_len)
      throw OverlapError("span [" + std::to_string(s.start_token) + "," +
                         std::to_string(s.end_token) + ") outside sequence of length " +
                         std::to_string(seq_len));
    int type = schema.type_index(s.entity_type);
    if (type < 0) throw LabelOutOfRange("entity type " + s.entity_type + " not in schema");
    for (std::size_t i = s.start_token; i < s.end_token; ++i) {
      if (used[i]) throw OverlapError("spans overlap at token " + std::to_string(i));
      used[i] = true;
      labels[i] = i == s.start_token ? schema.begin_label(type) : schema.inside_label(type);
    }
  }
  return labels;
}

std::vector<Span> spans_of(std::span<const LabelId> labels, const LabelSchema& schema,
                           SpanSource source) {
  std::vector<Span> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabelId l = labels[i];
    if (l == 0) continue;
    int type = schema.type_of(l);
    bool continues = schema.is_inside(l) && !out.empty() && out.back().end_token == i &&
                     out.back().entity_type == schema.entity_types()[type];
    if (continues) {
      out.back().end_token = i + 1;
    } else {
      out.push_back({i, i + 1, schema.entity_types()[type], source});
    }
  }
  return out;
}

std::vector<std::size_t> validate_bio(std::span<const LabelId> labels, const LabelSchema& schema) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabelId prev = i == 0 ? -1 : labels[i - 1];
    if (!schema.transition_allowed(prev, labels[i])) bad.push_back(i);
  }
  return bad;
}

std::vector<LabelId> annotate_doc(const preprocess::PreprocessedDoc& doc, const Gazetteer& gazetteer,
                                  const LabelSchema& schema, std::span<const Span> gold_spans) {
  std::vector<Span> all(gold_spans.begin(), gold_spans.end());
  for (auto& s : tag_regex_entities(doc)) all.push_back(std::move(s));
  for (auto& s : tag_gazetteer(doc, gazetteer)) all.push_back(std::move(s));
  std::erase_if(all, [&](const Span& s) { return schema.type_index(s.entity_type) < 0; });
  auto resolved = resolve_spans(std::move(all));
  return to_bio(resolved, doc.tokens.size(), schema);
}

void write_labels(const std::filesystem::path& path, std::span<const LabelRecord> records,
                  const LabelSchema& schema) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write labels to " + path.string());
  for (const auto& r : records) {
    std::vector<std::string> names;
    names.reserve(r.labels.size());
    for (LabelId l : r.labels) names.push_back(schema.label_name(l));
    out << json{{"record_id", std::to_string(r.record_id)}, {"lang", r.lang}, {"labels", names}}
               .dump()
        << '\n';
  }
}

std::vector<LabelRecord> read_labels(const std::filesystem::path& path, const LabelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read labels " + path.string());
  std::vector<LabelRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw MalformedRecord("label line is not JSON");
    try {
      LabelRecord r;
      const auto& id = j.at("record_id");
      r.record_id = id.is_string() ? std::stoull(id.get<std::string>()) : id.get<std::uint64_t>();
      r.lang = j.value("lang", "");
      for (const auto& name : j.at("labels")) r.labels.push_back(schema.label_id(name.get<std::string>()));
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw MalformedRecord(std::string("label line: ") + e.what());
    }
  }
  return out;
}

}  // namespace xbc::annotate

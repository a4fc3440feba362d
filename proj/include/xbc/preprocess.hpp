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
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xbc/feed_ingest.hpp"
#include "xbc/parallel.hpp"

namespace xbc::preprocess {

// Offsets are code-point indices into the normalized text, end exclusive.
struct Token {
  std::string surface;
  std::string normalized;
  std::string lemma;
  std::string stem;
  bool is_stopword = false;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct PreprocessedDoc {
  std::uint64_t record_id = 0;
  std::string lang;
  std::string normalized_text;
  std::vector<Token> tokens;
};

struct StemRule {
  std::string suffix;
  std::size_t min_stem_len = 1;
};

struct LanguageResources {
  std::string lang;
  std::unordered_set<std::string> stopwords;
  std::unordered_map<std::string, std::string> lemma_lexicon;
  std::vector<StemRule> stem_rules;
  // Augmentation tables; absent when the language ships none.
  std::optional<std::map<std::string, std::vector<std::string>>> synonyms;
  std::optional<std::map<std::string, std::string>> translation;

  void validate() const;
};

// Per-language resources keyed by ISO 639-1 code.
class ResourceSet {
 public:
  ResourceSet() = default;
  void add(LanguageResources res);
  // Resolves `lang`, falling back to the default language if one is set.
  // Throws MissingResources otherwise.
  const LanguageResources& get(std::string_view lang) const;
  bool has(std::string_view lang) const;
  void set_default(std::optional<std::string> lang) { default_ = std::move(lang); }
  const std::optional<std::string>& default_lang() const { return default_; }
  std::vector<std::string> languages() const;

 private:
  std::map<std::string, LanguageResources, std::less<>> by_lang_;
  std::optional<std::string> default_;
};

// Loads <dir>/<lang>/{stopwords.txt, lemmas.tsv, stem_rules.tsv} and the
// optional {synonyms.tsv, translate.tsv} for every language subdirectory.
ResourceSet load_resources(const std::filesystem::path& dir);
LanguageResources load_language(const std::filesystem::path& lang_dir, std::string lang);

std::string normalize(std::string_view text, std::string_view lang = {});

// IPv4, domain, file hash or CVE id: kept intact by the tokenizer.
bool is_ioc_token(std::string_view token);

std::vector<Token> tokenize(std::string_view normalized_text, std::string_view lang = {});

void remove_stopwords(std::span<Token> tokens, const LanguageResources& res);
std::string lemmatize(std::string_view token, const LanguageResources& res);
std::string stem(std::string_view token, const LanguageResources& res);

PreprocessedDoc preprocess_doc(const ingest::RawFeedRecord& record, std::string_view lang,
                               const ResourceSet& resources);

// Preprocesses a corpus; `langs[i]` is the routed language of corpus[i].
std::vector<PreprocessedDoc> preprocess_corpus(std::span<const ingest::RawFeedRecord> corpus,
                                               std::span<const std::string> langs,
                                               const ResourceSet& resources,
                                               Exec exec = Exec::kParallel);

std::string doc_to_json_line(const PreprocessedDoc& doc);
PreprocessedDoc doc_from_json_line(std::string_view line);

// JSON-lines mirror (docs.jsonl) plus the one-row-per-token table (tokens.tsv).
void write_docs(const std::filesystem::path& dir, std::span<const PreprocessedDoc> docs);
std::vector<PreprocessedDoc> read_docs(const std::filesystem::path& dir);

}  // namespace xbc::preprocess

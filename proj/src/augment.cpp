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

#include "xbc/augment.hpp"

#include <algorithm>

#include "xbc/errors.hpp"

namespace xbc::augment {

std::string to_string(Mode m) { return m == Mode::kSynonym ? "synonym" : "backtranslate"; }

Mode parse_mode(std::string_view s) {
  if (s == "synonym") return Mode::kSynonym;
  if (s == "backtranslate") return Mode::kBacktranslate;
  throw ConfigError("unknown augmentation mode '" + std::string(s) + "'");
}

DictionaryTranslator::DictionaryTranslator(std::map<std::string, std::string> forward)
    : forward_(std::move(forward)) {
  for (const auto& [word, pivot] : forward_) inverse_[pivot].push_back(word);
}

std::vector<std::string> DictionaryTranslator::round_trip(std::span<const std::string> tokens,
                                                          Rng& rng) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto f = forward_.find(t);
    if (f == forward_.end()) {
      out.push_back(t);
      continue;
    }
    const auto& back = inverse_.at(f->second);
    out.push_back(back[rng.below(back.size())]);
  }
  return out;
}

static annotate::TaggedSequence synonym_copy(const annotate::TaggedSequence& ex,
                                             const std::map<std::string, std::vector<std::string>>& table,
                                             const preprocess::LanguageResources& res, Rng& rng) {
  annotate::TaggedSequence out = ex;
  for (std::size_t i = 0; i < out.token_texts.size(); ++i) {
    if (out.labels[i] != 0 || res.stopwords.count(out.token_texts[i])) continue;
    // The draw happens for every eligible token so that the random stream
    // does not depend on table coverage.
    const bool replace = rng.uniform() < kSynonymReplaceProb;
    auto it = table.find(out.token_texts[i]);
    if (!replace || it == table.end() || it->second.empty()) continue;
    out.token_texts[i] = it->second[rng.below(it->second.size())];
  }
  return out;
}

static annotate::TaggedSequence backtranslate_copy(const annotate::TaggedSequence& ex,
                                                   const Translator& tr, Rng& rng) {
  annotate::TaggedSequence out;
  out.record_id = ex.record_id;
  out.lang = ex.lang;
  std::size_t i = 0;
  const std::size_t n = ex.token_texts.size();
  while (i < n) {
    std::size_t j = i;
    if (ex.labels[i] == 0) {
      while (j < n && ex.labels[j] == 0) ++j;
      auto run = tr.round_trip(std::span(ex.token_texts).subspan(i, j - i), rng);
      for (auto& t : run) {
        out.token_texts.push_back(std::move(t));
        out.labels.push_back(0);
      }
    } else {
      while (j < n && ex.labels[j] != 0) ++j;
      for (std::size_t k = i; k < j; ++k) {
        out.token_texts.push_back(ex.token_texts[k]);
        out.labels.push_back(ex.labels[k]);
      }
    }
    i = j;
  }
  return out;
}

std::vector<annotate::TaggedSequence> augment(const annotate::TaggedSequence& example, Mode mode,
                                              const preprocess::LanguageResources& resources,
                                              std::uint64_t seed, std::size_t copies,
                                              const Translator* translator) {
  if (example.labels.size() != example.token_texts.size())
    throw LengthMismatch("augment: labels and tokens differ in length");
  Rng rng(sub_seed(seed, to_string(mode)) ^ example.record_id);
  std::vector<annotate::TaggedSequence> out;
  if (mode == Mode::kSynonym) {
    if (!resources.synonyms) throw MissingSynonymTable("no synonym table for " + resources.lang);
    for (std::size_t c = 0; c < copies; ++c)
      out.push_back(synonym_copy(example, *resources.synonyms, resources, rng));
    return out;
  }
  std::optional<DictionaryTranslator> stub;
  if (!translator) {
    if (!resources.translation)
      throw TranslatorUnavailable("no translation dictionary for " + resources.lang);
    stub.emplace(*resources.translation);
    translator = &*stub;
  }
  for (std::size_t c = 0; c < copies; ++c) out.push_back(backtranslate_copy(example, *translator, rng));
  return out;
}

}  // namespace xbc::augment

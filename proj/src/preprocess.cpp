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

#include "xbc/preprocess.hpp"

#include <fstream>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "xbc/errors.hpp"
#include "xbc/text.hpp"

namespace xbc::preprocess {

using nlohmann::json;

void LanguageResources::validate() const {
  for (const auto& r : stem_rules) {
    if (r.suffix.empty()) throw ConfigError(lang + ": empty stem suffix");
    if (r.min_stem_len < 1) throw ConfigError(lang + ": min_stem_len must be >= 1");
  }
}

void ResourceSet::add(LanguageResources res) {
  res.validate();
  std::string key = res.lang;
  by_lang_.insert_or_assign(std::move(key), std::move(res));
}

const LanguageResources& ResourceSet::get(std::string_view lang) const {
  if (auto it = by_lang_.find(lang); it != by_lang_.end()) return it->second;
  if (default_) {
    if (auto it = by_lang_.find(*default_); it != by_lang_.end()) return it->second;
  }
  throw MissingResources(std::string(lang));
}

bool ResourceSet::has(std::string_view lang) const { return by_lang_.find(lang) != by_lang_.end(); }

std::vector<std::string> ResourceSet::languages() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : by_lang_) out.push_back(k);
  return out;
}

static std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingResources("cannot read " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t b = 0;
    for (;;) {
      std::size_t e = line.find('\t', b);
      cols.push_back(text::trim(line.substr(b, e == std::string::npos ? e : e - b)));
      if (e == std::string::npos) break;
      b = e + 1;
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

LanguageResources load_language(const std::filesystem::path& dir, std::string lang) {
  LanguageResources res;
  res.lang = std::move(lang);
  for (const auto& row : read_tsv(dir / "stopwords.txt"))
    res.stopwords.insert(normalize(row[0]));
  if (std::filesystem::exists(dir / "lemmas.tsv")) {
    for (const auto& row : read_tsv(dir / "lemmas.tsv")) {
      if (row.size() < 2) throw ConfigError("lemmas.tsv: expected surface<TAB>lemma");
      res.lemma_lexicon[normalize(row[0])] = normalize(row[1]);
    }
  }
  if (std::filesystem::exists(dir / "stem_rules.tsv")) {
    for (const auto& row : read_tsv(dir / "stem_rules.tsv")) {
      if (row.size() < 2) throw ConfigError("stem_rules.tsv: expected suffix<TAB>min_len");
      res.stem_rules.push_back({row[0], static_cast<std::size_t>(std::stoul(row[1]))});
    }
  }
  if (std::filesystem::exists(dir / "synonyms.tsv")) {
    res.synonyms.emplace();
    for (const auto& row : read_tsv(dir / "synonyms.tsv")) {
      auto& alts = (*res.synonyms)[normalize(row[0])];
      for (std::size_t i = 1; i < row.size(); ++i)
        if (!row[i].empty()) alts.push_back(normalize(row[i]));
    }
  }
  if (std::filesystem::exists(dir / "translate.tsv")) {
    res.translation.emplace();
    for (const auto& row : read_tsv(dir / "translate.tsv")) {
      if (row.size() < 2) throw ConfigError("translate.tsv: expected word<TAB>pivot");
      (*res.translation)[normalize(row[0])] = normalize(row[1]);
    }
  }
  res.validate();
  return res;
}

ResourceSet load_resources(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw MissingResources("resource directory " + dir.string());
  ResourceSet set;
  std::vector<std::filesystem::path> langs;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory()) langs.push_back(e.path());
  std::sort(langs.begin(), langs.end());
  for (const auto& p : langs) set.add(load_language(p, p.filename().string()));
  return set;
}

static bool is_preserved(char32_t c) {
  return c == U'.' || c == U':' || c == U'/' || c == U'-' || c == U'_' || c == U'@';
}

std::string normalize(std::string_view input, std::string_view /*lang*/) {
  std::u32string cps = text::to_u32(text::fold_case(text::nfc(input)));
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t c : cps) {
    bool blank = text::is_space(c) || text::is_control(c) ||
                 (text::is_punct_or_symbol(c) && !is_preserved(c));
    if (blank) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return text::nfc(text::to_utf8(out));
}

bool is_ioc_token(std::string_view token) {
  static const std::regex ipv4(R"(\d{1,3}(\.\d{1,3}){3})");
  static const std::regex domain(R"(([a-z0-9_-]+\.)+[a-z]{2,})");
  static const std::regex hash(R"([0-9a-f]{32}|[0-9a-f]{40}|[0-9a-f]{64})");
  static const std::regex cve(R"(cve-\d{4}-\d{4,})");
  std::string s(token);
  return std::regex_match(s, ipv4) || std::regex_match(s, domain) ||
         std::regex_match(s, hash) || std::regex_match(s, cve);
}

std::vector<Token> tokenize(std::string_view normalized_text, std::string_view /*lang*/) {
  std::u32string cps = text::to_u32(normalized_text);
  std::vector<Token> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    Token t;
    t.surface = text::to_utf8(std::u32string_view(cps).substr(b, e - b));
    t.normalized = t.surface;
    t.char_start = b;
    t.char_end = e;
    out.push_back(std::move(t));
  };
  auto detachable = [](char32_t c) { return c == U'.' || c == U':'; };
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && text::is_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !text::is_space(cps[j])) ++j;
    if (j == i) break;
    std::string chunk = text::to_utf8(std::u32string_view(cps).substr(i, j - i));
    if (is_ioc_token(chunk)) {
      emit(i, j);
    } else {
      std::size_t b = i, e = j;
      while (b < e && detachable(cps[b])) {
        emit(b, b + 1);
        ++b;
      }
      std::size_t core_end = e;
      while (core_end > b && detachable(cps[core_end - 1])) --core_end;
      if (core_end > b) emit(b, core_end);
      for (std::size_t k = core_end; k < e; ++k) emit(k, k + 1);
    }
    i = j;
  }
  return out;
}

void remove_stopwords(std::span<Token> tokens, const LanguageResources& res) {
  for (auto& t : tokens) t.is_stopword = res.stopwords.count(t.normalized) != 0;
}

std::string lemmatize(std::string_view token, const LanguageResources& res) {
  auto it = res.lemma_lexicon.find(std::string(token));
  return it == res.lemma_lexicon.end() ? std::string(token) : it->second;
}

std::string stem(std::string_view token, const LanguageResources& res) {
  std::u32string cps = text::to_u32(token);
  for (const auto& rule : res.stem_rules) {
    std::u32string suffix = text::to_u32(rule.suffix);
    if (suffix.size() > cps.size() ||
        cps.compare(cps.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    // Only the first matching rule is considered.
    std::size_t remaining = cps.size() - suffix.size();
    if (remaining < rule.min_stem_len) return std::string(token);
    return text::to_utf8(std::u32string_view(cps).substr(0, remaining));
  }
  return std::string(token);
}

PreprocessedDoc preprocess_doc(const ingest::RawFeedRecord& record, std::string_view lang,
                               const ResourceSet& resources) {
  const LanguageResources& res = resources.get(lang);
  PreprocessedDoc doc;
  doc.record_id = record.record_id;
  // The document keeps its routed language even when a fallback
  // resource set does the work.
  doc.lang = std::string(lang);
  doc.normalized_text = normalize(record.text, res.lang);
  doc.tokens = tokenize(doc.normalized_text, res.lang);
  remove_stopwords(doc.tokens, res);
  for (auto& t : doc.tokens) {
    t.lemma = lemmatize(t.normalized, res);
    t.stem = stem(t.normalized, res);
  }
  return doc;
}

std::vector<PreprocessedDoc> preprocess_corpus(std::span<const ingest::RawFeedRecord> corpus,
                                               std::span<const std::string> langs,
                                               const ResourceSet& resources, Exec exec) {
  if (langs.size() != corpus.size())
    throw MissingResources("language list does not match corpus size");
  // Resolve resources up front so a missing language fails before any work.
  for (const auto& l : langs) resources.get(l);
  std::vector<PreprocessedDoc> docs(corpus.size());
  const long n = static_cast<long>(corpus.size());
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < n; ++i) docs[i] = preprocess_doc(corpus[i], langs[i], resources);
  } else {
    for (long i = 0; i < n; ++i) docs[i] = preprocess_doc(corpus[i], langs[i], resources);
  }
  return docs;
}

std::string doc_to_json_line(const PreprocessedDoc& doc) {
  json toks = json::array();
  for (const auto& t : doc.tokens) {
    toks.push_back({{"surface", t.surface},
                    {"normalized", t.normalized},
                    {"lemma", t.lemma},
                    {"stem", t.stem},
                    {"is_stopword", t.is_stopword},
                    {"char_start", t.char_start},
                    {"char_end", t.char_end}});
  }
  json j = {{"record_id", std::to_string(doc.record_id)},
            {"lang", doc.lang},
            {"normalized_text", doc.normalized_text},
            {"tokens", toks}};
  return j.dump();
}

PreprocessedDoc doc_from_json_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw MalformedRecord("document line is not JSON");
  try {
    PreprocessedDoc doc;
    doc.record_id = std::stoull(j.at("record_id").get<std::string>());
    doc.lang = j.at("lang").get<std::string>();
    doc.normalized_text = j.at("normalized_text").get<std::string>();
    for (const auto& t : j.at("tokens")) {
      Token tok;
      tok.surface = t.at("surface").get<std::string>();
      tok.normalized = t.at("normalized").get<std::string>();
      tok.lemma = t.at("lemma").get<std::string>();
      tok.stem = t.at("stem").get<std::string>();
      tok.is_stopword = t.at("is_stopword").get<bool>();
      tok.char_start = t.at("char_start").get<std::size_t>();
      tok.char_end = t.at("char_end").get<std::size_t>();
      doc.tokens.push_back(std::move(tok));
    }
    return doc;
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("document line: ") + e.what());
  }
}

static std::string tsv_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\t') out += "\\t";
    else if (c == '\n') out += "\\n";
    else if (c == '\\') out += "\\\\";
    else out += c;
  }
  return out;
}

void write_docs(const std::filesystem::path& dir, std::span<const PreprocessedDoc> docs) {
  std::filesystem::create_directories(dir);
  std::ofstream jl(dir / "docs.jsonl");
  std::ofstream tsv(dir / "tokens.tsv");
  if (!jl || !tsv) throw MissingResources("cannot write preprocessed corpus to " + dir.string());
  tsv << "record_id\tlang\ttoken_index\tsurface\tnormalized\tlemma\tstem\tis_stopword\tchar_start"
         "\tchar_end\n";
  for (const auto& d : docs) {
    jl << doc_to_json_line(d) << '\n';
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      const Token& t = d.tokens[i];
      tsv << d.record_id << '\t' << d.lang << '\t' << i << '\t' << tsv_escape(t.surface) << '\t'
          << tsv_escape(t.normalized) << '\t' << tsv_escape(t.lemma) << '\t' << tsv_escape(t.stem)
          << '\t' << (t.is_stopword ? 1 : 0) << '\t' << t.char_start << '\t' << t.char_end
          << '\n';
    }
  }
}

std::vector<PreprocessedDoc> read_docs(const std::filesystem::path& dir) {
  std::filesystem::path p = std::filesystem::is_directory(dir) ? dir / "docs.jsonl" : dir;
  std::ifstream in(p);
  if (!in) throw MissingResources("cannot read documents " + p.string());
  std::vector<PreprocessedDoc> docs;
  std::string line;
  while (std::getline(in, line))
    if (!text::trim(line).empty()) docs.push_back(doc_from_json_line(line));
  return docs;
}

}  // namespace xbc::preprocess

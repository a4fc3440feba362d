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

#include "xbc/langid.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "xbc/errors.hpp"
#include "xbc/text.hpp"

namespace xbc::langid {

using nlohmann::json;

LanguageProfile::LanguageProfile(
    std::string lang, int n_max,
    std::vector<std::unordered_map<std::u32string, std::uint64_t>> counts)
    : lang_(std::move(lang)), n_max_(n_max), counts_(std::move(counts)) {
  if (n_max_ < 1) throw ConfigError("n_max must be >= 1");
  counts_.resize(n_max_);
  totals_.assign(n_max_, 0);
  log_probs_.resize(n_max_);
  unseen_.resize(n_max_);
  for (int n = 0; n < n_max_; ++n) {
    for (const auto& [g, c] : counts_[n]) totals_[n] += c;
    const double denom = static_cast<double>(totals_[n] + counts_[n].size());
    for (const auto& [g, c] : counts_[n])
      log_probs_[n][g] = std::log(static_cast<double>(c + 1) / denom);
    unseen_[n] = denom > 0 ? std::log(1.0 / denom) : 0.0;
  }
}

std::uint64_t LanguageProfile::total_ngrams() const {
  std::uint64_t t = 0;
  for (auto v : totals_) t += v;
  return t;
}

double LanguageProfile::log_prob(std::u32string_view ngram) const {
  const int n = static_cast<int>(ngram.size());
  if (n < 1 || n > n_max_) return 0.0;
  const auto& table = log_probs_[n - 1];
  auto it = table.find(std::u32string(ngram));
  return it == table.end() ? unseen_[n - 1] : it->second;
}

std::u32string prepare(std::string_view input) {
  std::u32string cps = text::to_u32(text::fold_case(text::nfc(input)));
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t c : cps) {
    if (text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<LanguageProfile> train_profiles(
    const std::map<std::string, std::vector<std::string>>& samples, int n_max) {
  if (samples.empty()) throw EmptyTrainingSet("no languages given");
  std::vector<LanguageProfile> out;
  for (const auto& [lang, texts] : samples) {
    std::vector<std::unordered_map<std::u32string, std::uint64_t>> counts(n_max);
    bool any = false;
    for (const auto& t : texts) {
      std::u32string p = prepare(t);
      if (p.empty()) continue;
      any = true;
      for (int n = 1; n <= n_max; ++n)
        for (std::size_t i = 0; i + n <= p.size(); ++i) ++counts[n - 1][p.substr(i, n)];
    }
    if (!any) throw EmptyTrainingSet("language " + lang + " has no non-empty sample");
    out.emplace_back(lang, n_max, std::move(counts));
  }
  return out;
}

LanguageVerdict detect_language(std::string_view input,
                                std::span<const LanguageProfile> profiles,
                                int min_chars) {
  std::u32string p = prepare(input);
  int usable = 0;
  for (char32_t c : p) usable += text::is_word_char(c) ? 1 : 0;
  if (usable < min_chars || profiles.empty()) return {};

  double best = -std::numeric_limits<double>::infinity();
  double second = best;
  const LanguageProfile* winner = nullptr;
  for (const auto& prof : profiles) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int n = 1; n <= prof.n_max(); ++n) {
      for (std::size_t i = 0; i + n <= p.size(); ++i) {
        sum += prof.log_prob(std::u32string_view(p).substr(i, n));
        ++count;
      }
    }
    double avg = count ? sum / static_cast<double>(count) : 0.0;
    if (avg > best) {
      second = best;
      best = avg;
      winner = &prof;
    } else if (avg > second) {
      second = avg;
    }
  }
  LanguageVerdict v;
  v.lang = winner->lang();
  v.confidence = profiles.size() == 1 ? 1.0 : 1.0 / (1.0 + std::exp(second - best));
  return v;
}

std::vector<LanguageVerdict> detect_all(std::span<const ingest::RawFeedRecord> corpus,
                                        std::span<const LanguageProfile> profiles,
                                        int min_chars, Exec exec) {
  std::vector<LanguageVerdict> verdicts(corpus.size());
  const long n = static_cast<long>(corpus.size());
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < n; ++i)
      verdicts[i] = detect_language(corpus[i].text, profiles, min_chars);
  } else {
    for (long i = 0; i < n; ++i)
      verdicts[i] = detect_language(corpus[i].text, profiles, min_chars);
  }
  return verdicts;
}

std::map<std::string, std::vector<std::uint64_t>> segment_by_language(
    std::span<const ingest::RawFeedRecord> corpus,
    std::span<const LanguageProfile> profiles, int min_chars, Exec exec) {
  auto verdicts = detect_all(corpus, profiles, min_chars, exec);
  std::map<std::string, std::vector<std::uint64_t>> buckets;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    buckets[verdicts[i].lang].push_back(corpus[i].record_id);
  return buckets;
}

void save_profiles(const std::filesystem::path& path,
                   std::span<const LanguageProfile> profiles) {
  json arr = json::array();
  for (const auto& p : profiles) {
    json counts = json::object();
    for (int n = 1; n <= p.n_max(); ++n) {
      // std::map gives a stable key order in the file.
      std::map<std::string, std::uint64_t> sorted;
      for (const auto& [g, c] : p.counts(n)) sorted[text::to_utf8(g)] = c;
      counts[std::to_string(n)] = sorted;
    }
    arr.push_back({{"lang", p.lang()}, {"n_max", p.n_max()}, {"counts", counts}});
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write profiles to " + path.string());
  out << json{{"profiles", arr}}.dump(1) << '\n';
}

static LanguageProfile profile_from_json(const json& j) {
  std::string lang = j.at("lang").get<std::string>();
  int n_max = j.at("n_max").get<int>();
  std::vector<std::unordered_map<std::u32string, std::uint64_t>> counts(n_max);
  for (int n = 1; n <= n_max; ++n) {
    auto it = j.at("counts").find(std::to_string(n));
    if (it == j.at("counts").end()) continue;
    for (auto& [g, c] : it->items()) {
      std::u32string key = text::to_u32(g);
      if (static_cast<int>(key.size()) != n)
        throw ConfigError("profile " + lang + ": n-gram '" + g + "' is not of order " +
                          std::to_string(n));
      counts[n - 1][key] = c.get<std::uint64_t>();
    }
  }
  return LanguageProfile(lang, n_max, std::move(counts));
}

std::vector<LanguageProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read profiles " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("profiles file is not valid JSON: " + path.string());
  std::vector<LanguageProfile> out;
  try {
    if (j.is_object() && j.contains("profiles")) {
      for (const auto& p : j["profiles"]) out.push_back(profile_from_json(p));
    } else {
      out.push_back(profile_from_json(j));
    }
  } catch (const json::exception& e) {
    throw ConfigError("profiles " + path.string() + ": " + e.what());
  }
  if (out.empty()) throw ConfigError("profiles file holds no profiles: " + path.string());
  return out;
}

}  // namespace xbc::langid

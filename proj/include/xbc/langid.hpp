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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xbc/feed_ingest.hpp"
#include "xbc/parallel.hpp"

namespace xbc::langid {

inline constexpr const char* kUndetermined = "und";

// Character n-gram model for one language, orders 1..n_max. Counts are the
// persisted form; log probabilities are rebuilt from them.
class LanguageProfile {
 public:
  LanguageProfile(std::string lang, int n_max,
                  std::vector<std::unordered_map<std::u32string, std::uint64_t>> counts);

  const std::string& lang() const { return lang_; }
  int n_max() const { return n_max_; }
  std::uint64_t total_ngrams(int order) const { return totals_[order - 1]; }
  std::uint64_t total_ngrams() const;
  const std::unordered_map<std::u32string, std::uint64_t>& counts(int order) const {
    return counts_[order - 1];
  }

  // Add-one smoothed log probability: log((c + 1) / (N_n + V_n)). Unseen
  // n-grams score as c = 0.
  double log_prob(std::u32string_view ngram) const;

 private:
  std::string lang_;
  int n_max_;
  std::vector<std::unordered_map<std::u32string, std::uint64_t>> counts_;
  std::vector<std::uint64_t> totals_;
  std::vector<std::unordered_map<std::u32string, double>> log_probs_;
  std::vector<double> unseen_;
};

struct LanguageVerdict {
  std::string lang = kUndetermined;
  double confidence = 0.0;
};

// Text prepared for n-gram extraction: NFC + case folded, whitespace runs
// collapsed to one space.
std::u32string prepare(std::string_view text);

std::vector<LanguageProfile> train_profiles(
    const std::map<std::string, std::vector<std::string>>& samples, int n_max = 3);

LanguageVerdict detect_language(std::string_view text,
                                std::span<const LanguageProfile> profiles,
                                int min_chars = 10);

// lang -> record ids in corpus order. Every record lands in exactly one
// bucket, "und" included.
std::map<std::string, std::vector<std::uint64_t>> segment_by_language(
    std::span<const ingest::RawFeedRecord> corpus,
    std::span<const LanguageProfile> profiles, int min_chars = 10,
    Exec exec = Exec::kParallel);

std::vector<LanguageVerdict> detect_all(std::span<const ingest::RawFeedRecord> corpus,
                                        std::span<const LanguageProfile> profiles,
                                        int min_chars, Exec exec);

void save_profiles(const std::filesystem::path& path,
                   std::span<const LanguageProfile> profiles);
std::vector<LanguageProfile> load_profiles(const std::filesystem::path& path);

}  // namespace xbc::langid

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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xbc/annotate.hpp"
#include "xbc/hash.hpp"
#include "xbc/preprocess.hpp"

namespace xbc::augment {

enum class Mode { kSynonym, kBacktranslate };

std::string to_string(Mode m);
Mode parse_mode(std::string_view s);

inline constexpr double kSynonymReplaceProb = 0.15;

// Round-trip translation of a run of non-entity tokens. The output length
// may differ from the input.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::vector<std::string> round_trip(std::span<const std::string> tokens, Rng& rng) const = 0;
};

// Dictionary stub: word -> pivot, then pivot -> a uniformly chosen source
// word sharing that pivot. Unknown words pass through unchanged.
class DictionaryTranslator : public Translator {
 public:
  explicit DictionaryTranslator(std::map<std::string, std::string> forward);
  std::vector<std::string> round_trip(std::span<const std::string> tokens, Rng& rng) const override;

 private:
  std::map<std::string, std::string> forward_;
  std::map<std::string, std::vector<std::string>> inverse_;
};

// Produces `copies` augmented variants. Entity tokens (label != O) are
// never altered and every output stays BIO-valid. Throws
// MissingSynonymTable / TranslatorUnavailable when the language lacks the
// needed table and no translator is supplied.
std::vector<annotate::TaggedSequence> augment(const annotate::TaggedSequence& example, Mode mode,
                                              const preprocess::LanguageResources& resources,
                                              std::uint64_t seed, std::size_t copies = 1,
                                              const Translator* translator = nullptr);

}  // namespace xbc::augment

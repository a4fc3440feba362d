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

#include <string>
#include <string_view>
#include <vector>

// Thin UTF-8 / Unicode helpers over ICU.
namespace xbc::text {

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);

std::string nfc(std::string_view utf8);
std::string fold_case(std::string_view utf8);

bool is_space(char32_t c);
bool is_control(char32_t c);
// Punctuation or symbol (general categories P* and S*).
bool is_punct_or_symbol(char32_t c);
// Letters, marks and digits: what language detection counts as content.
bool is_word_char(char32_t c);

std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);

}  // namespace xbc::text

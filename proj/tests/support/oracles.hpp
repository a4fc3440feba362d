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

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls the code under test except for plain accessors.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "xbc/annotate.hpp"
#include "xbc/crf.hpp"
#include "xbc/hash.hpp"
#include "xbc/matrix.hpp"

namespace xbc::testing {

inline std::filesystem::path data_dir() { return XBC_DATA_DIR; }

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("xbc-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data) v = scale * (2.0 * rng.uniform() - 1.0);
  return m;
}

inline crf::CrfParams random_crf(Rng& rng, std::size_t k, double scale = 1.0) {
  crf::CrfParams p(k);
  for (auto& v : p.transitions.data) v = scale * (2.0 * rng.uniform() - 1.0);
  p.apply_mask();
  return p;
}

// Term-by-term path score, START and STOP included.
inline double path_score(const Matrix& em, const Matrix& trans, const std::vector<int>& y) {
  const std::size_t k = em.cols;
  double s = trans(k, y[0]);
  for (std::size_t t = 0; t < y.size(); ++t) {
    s += em(t, y[t]);
    if (t > 0) s += trans(y[t - 1], y[t]);
  }
  return s + trans(y.back(), k + 1);
}

// Calls f(path) for every one of the K^T label sequences.
template <typename F>
void for_each_path(std::size_t t_len, std::size_t k, F&& f) {
  std::vector<int> y(t_len, 0);
  for (;;) {
    f(static_cast<const std::vector<int>&>(y));
    std::size_t i = 0;
    while (i < t_len && ++y[i] == static_cast<int>(k)) y[i++] = 0;
    if (i == t_len) return;
  }
}

inline double brute_log_partition(const Matrix& em, const crf::CrfParams& crf) {
  std::vector<double> scores;
  for_each_path(em.rows, em.cols, [&](const std::vector<int>& y) {
    scores.push_back(path_score(em, crf.transitions, y));
  });
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) m = std::max(m, s);
  long double acc = 0.0L;
  for (double s : scores) acc += std::exp(static_cast<long double>(s - m));
  return m + static_cast<double>(std::log(acc));
}

struct BruteMax {
  double score = -std::numeric_limits<double>::infinity();
  std::vector<int> tags;
  bool unique = true;
};

// Exhaustive argmax. With `mask`, masked paths are excluded (their masked
// score is < -1e29); the reported score is the unmasked one.
inline BruteMax brute_viterbi(const Matrix& em, const crf::CrfParams& crf, const Matrix* mask = nullptr) {
  Matrix search = crf.transitions;
  if (mask)
    for (std::size_t i = 0; i < search.data.size(); ++i) search.data[i] += mask->data[i];
  BruteMax best;
  double best_search = -std::numeric_limits<double>::infinity();
  for_each_path(em.rows, em.cols, [&](const std::vector<int>& y) {
    double s = path_score(em, search, y);
    if (mask && s < -1e29) return;
    if (s > best_search) {
      best_search = s;
      best.tags = y;
      best.unique = true;
    } else if (s == best_search) {
      best.unique = false;
    }
  });
  if (!best.tags.empty()) best.score = path_score(em, crf.transitions, best.tags);
  return best;
}

// Two-column CoNLL: token<TAB>label, blank line between sentences.
inline std::vector<annotate::TaggedSequence> read_conll(const std::filesystem::path& path,
                                                        const annotate::LabelSchema& schema) {
  std::ifstream in(path);
  std::vector<annotate::TaggedSequence> out;
  annotate::TaggedSequence cur;
  auto flush = [&] {
    if (cur.token_texts.empty()) return;
    cur.record_id = out.size() + 1;
    cur.lang = "en";
    out.push_back(std::move(cur));
    cur = {};
  };
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) {
      flush();
      continue;
    }
    auto tab = line.find('\t');
    cur.token_texts.push_back(line.substr(0, tab));
    cur.labels.push_back(schema.label_id(line.substr(tab + 1)));
  }
  flush();
  return out;
}

// A random set of non-overlapping spans over [0, len).
inline std::vector<annotate::Span> random_spans(Rng& rng, std::size_t len, const annotate::LabelSchema& schema) {
  std::vector<annotate::Span> spans;
  std::size_t i = 0;
  const auto& types = schema.entity_types();
  while (i < len) {
    if (rng.uniform() < 0.35) {
      std::size_t l = 1 + rng.below(std::min<std::size_t>(4, len - i));
      spans.push_back({i, i + l, types[rng.below(types.size())], annotate::SpanSource::kModel});
      i += l;
    } else {
      ++i;
    }
  }
  return spans;
}

}  // namespace xbc::testing

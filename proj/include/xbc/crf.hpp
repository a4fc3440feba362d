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

#include <span>
#include <vector>

#include "xbc/annotate.hpp"
#include "xbc/matrix.hpp"

namespace xbc::crf {

// Stand-in for -infinity; keeps all arithmetic finite.
inline constexpr double kNegInf = -1e30;

// Linear-chain CRF transition scores over K labels plus virtual START (row
// K) and STOP (column K + 1) states. transitions(i, j) scores i -> j.
struct CrfParams {
  std::size_t num_labels = 0;
  Matrix transitions;

  CrfParams() = default;
  explicit CrfParams(std::size_t k);  // zero scores, masked START/STOP

  std::size_t start() const { return num_labels; }
  std::size_t stop() const { return num_labels + 1; }

  // Re-imposes -inf on transitions into START and out of STOP.
  void apply_mask();
  // Throws ShapeMismatch / ModelFormatError on bad shape or non-finite
  // unmasked entries.
  void validate() const;
};

double log_sum_exp(std::span<const double> v);

// START -> tags[0] + sum emissions + sum transitions + tags[T-1] -> STOP.
double sequence_score(const Matrix& em, const CrfParams& crf, std::span<const int> tags);

// Forward algorithm in log space.
double log_partition(const Matrix& em, const CrfParams& crf);

struct Decoded {
  std::vector<int> tags;
  double score = 0.0;
};

// Additive (K+2)x(K+2) mask: 0 where the transition is BIO-valid, kNegInf
// where an I-X would follow anything other than B-X / I-X (START included).
Matrix bio_constraint_mask(const annotate::LabelSchema& schema);

// Exact argmax. Ties go to the smaller label id. `mask`, when given, is
// added to the transitions during the search only; the returned score is
// the unmasked sequence_score of the decoded tags.
Decoded viterbi(const Matrix& em, const CrfParams& crf, const Matrix* mask = nullptr);
Decoded viterbi(const Matrix& em, const CrfParams& crf, const annotate::LabelSchema& schema,
                bool hard_constraints);

double nll(const Matrix& em, const CrfParams& crf, std::span<const int> gold);

// Per-position label marginals P(tag_t = k), T x K.
Matrix marginals(const Matrix& em, const CrfParams& crf);

struct NllGrad {
  double nll = 0.0;
  Matrix d_emissions;   // T x K
  Matrix d_transitions; // (K+2) x (K+2), zero on masked entries
};

// Exact gradient of the NLL via forward-backward marginals.
NllGrad nll_with_grad(const Matrix& em, const CrfParams& crf, std::span<const int> gold);

// Per-token softmax cross-entropy over emissions (the CRF-free ablation).
NllGrad softmax_nll_with_grad(const Matrix& em, std::span<const int> gold);
std::vector<int> softmax_decode(const Matrix& em);

}  // namespace xbc::crf

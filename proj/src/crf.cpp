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

#include "xbc/crf.hpp"

#include <algorithm>
#include <cmath>

#include "xbc/errors.hpp"

namespace xbc::crf {

CrfParams::CrfParams(std::size_t k) : num_labels(k), transitions(k + 2, k + 2, 0.0) {
  apply_mask();
}

void CrfParams::apply_mask() {
  const std::size_t n = num_labels + 2;
  for (std::size_t i = 0; i < n; ++i) {
    transitions(i, start()) = kNegInf;
    transitions(stop(), i) = kNegInf;
  }
}

void CrfParams::validate() const {
  const std::size_t n = num_labels + 2;
  if (transitions.rows != n || transitions.cols != n)
    throw ShapeMismatch("CRF transitions must be (K+2)x(K+2)");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = transitions(i, j);
      bool masked = j == start() || i == stop();
      if (masked ? v != kNegInf : !std::isfinite(v))
        throw ModelFormatError("CRF transition (" + std::to_string(i) + "," + std::to_string(j) +
                               ") violates the START/STOP mask invariant");
    }
  }
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  double m = *std::max_element(v.begin(), v.end());
  if (m <= kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

static void check_shapes(const Matrix& em, const CrfParams& crf) {
  if (em.cols != crf.num_labels) throw ShapeMismatch("emission width != CRF label count");
}

double sequence_score(const Matrix& em, const CrfParams& crf, std::span<const int> tags) {
  check_shapes(em, crf);
  if (tags.size() != em.rows)
    throw LengthMismatch("tag sequence length " + std::to_string(tags.size()) +
                         " != emission rows " + std::to_string(em.rows));
  if (tags.empty()) return 0.0;
  const auto& A = crf.transitions;
  double s = A(crf.start(), tags[0]);
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += em(t, tags[t]);
    if (t + 1 < tags.size()) s += A(tags[t], tags[t + 1]);
  }
  return s + A(tags.back(), crf.stop());
}

// alpha(t, k): log-sum of scores of all prefixes ending in k at t.
static Matrix forward_table(const Matrix& em, const CrfParams& crf) {
  const std::size_t T = em.rows, K = em.cols;
  const auto& A = crf.transitions;
  Matrix alpha(T, K);
  for (std::size_t k = 0; k < K; ++k) alpha(0, k) = A(crf.start(), k) + em(0, k);
  std::vector<double> buf(K);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) buf[j] = alpha(t - 1, j) + A(j, k);
      alpha(t, k) = log_sum_exp(buf) + em(t, k);
    }
  }
  return alpha;
}

// beta(t, k): log-sum of scores of all suffixes after position t given k.
static Matrix backward_table(const Matrix& em, const CrfParams& crf) {
  const std::size_t T = em.rows, K = em.cols;
  const auto& A = crf.transitions;
  Matrix beta(T, K);
  for (std::size_t k = 0; k < K; ++k) beta(T - 1, k) = A(k, crf.stop());
  std::vector<double> buf(K);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) buf[k] = A(j, k) + em(t + 1, k) + beta(t + 1, k);
      beta(t, j) = log_sum_exp(buf);
    }
  }
  return beta;
}

static double partition_from_alpha(const Matrix& alpha, const CrfParams& crf) {
  const std::size_t T = alpha.rows, K = alpha.cols;
  std::vector<double> last(K);
  for (std::size_t k = 0; k < K; ++k) last[k] = alpha(T - 1, k) + crf.transitions(k, crf.stop());
  return log_sum_exp(last);
}

double log_partition(const Matrix& em, const CrfParams& crf) {
  check_shapes(em, crf);
  if (em.rows == 0) throw EmptySequence("log_partition needs T >= 1");
  return partition_from_alpha(forward_table(em, crf), crf);
}

Matrix bio_constraint_mask(const annotate::LabelSchema& schema) {
  const std::size_t K = schema.size();
  Matrix mask(K + 2, K + 2, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    if (!schema.transition_allowed(-1, static_cast<int>(j))) mask(K, j) = kNegInf;
    for (std::size_t i = 0; i < K; ++i)
      if (!schema.transition_allowed(static_cast<int>(i), static_cast<int>(j))) mask(i, j) = kNegInf;
  }
  return mask;
}

Decoded viterbi(const Matrix& em, const CrfParams& crf, const Matrix* mask) {
  check_shapes(em, crf);
  const std::size_t T = em.rows, K = em.cols;
  if (T == 0) throw EmptySequence("viterbi needs T >= 1");
  auto trans = [&](std::size_t i, std::size_t j) {
    return crf.transitions(i, j) + (mask ? (*mask)(i, j) : 0.0);
  };
  Matrix delta(T, K);
  std::vector<int> back(T * K, 0);
  for (std::size_t k = 0; k < K; ++k) delta(0, k) = trans(crf.start(), k) + em(0, k);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      double best = delta(t - 1, 0) + trans(0, k);
      int arg = 0;
      for (std::size_t j = 1; j < K; ++j) {
        double s = delta(t - 1, j) + trans(j, k);
        if (s > best) {
          best = s;
          arg = static_cast<int>(j);
        }
      }
      delta(t, k) = best + em(t, k);
      back[t * K + k] = arg;
    }
  }
  double best = delta(T - 1, 0) + trans(0, crf.stop());
  int arg = 0;
  for (std::size_t k = 1; k < K; ++k) {
    double s = delta(T - 1, k) + trans(k, crf.stop());
    if (s > best) {
      best = s;
      arg = static_cast<int>(k);
    }
  }
  Decoded out;
  out.tags.resize(T);
  out.tags[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) out.tags[t - 1] = back[t * K + out.tags[t]];
  out.score = sequence_score(em, crf, out.tags);
  return out;
}

Decoded viterbi(const Matrix& em, const CrfParams& crf, const annotate::LabelSchema& schema,
                bool hard_constraints) {
  if (!hard_constraints) return viterbi(em, crf, nullptr);
  Matrix mask = bio_constraint_mask(schema);
  return viterbi(em, crf, &mask);
}

double nll(const Matrix& em, const CrfParams& crf, std::span<const int> gold) {
  double score = sequence_score(em, crf, gold);
  return log_partition(em, crf) - score;
}

Matrix marginals(const Matrix& em, const CrfParams& crf) {
  check_shapes(em, crf);
  Matrix alpha = forward_table(em, crf);
  Matrix beta = backward_table(em, crf);
  double log_z = partition_from_alpha(alpha, crf);
  Matrix p(em.rows, em.cols);
  for (std::size_t t = 0; t < em.rows; ++t)
    for (std::size_t k = 0; k < em.cols; ++k) p(t, k) = std::exp(alpha(t, k) + beta(t, k) - log_z);
  return p;
}

NllGrad nll_with_grad(const Matrix& em, const CrfParams& crf, std::span<const int> gold) {
  check_shapes(em, crf);
  const std::size_t T = em.rows, K = em.cols;
  if (gold.size() != T) throw LengthMismatch("gold length != emission rows");
  if (T == 0) throw EmptySequence("nll needs T >= 1");
  const auto& A = crf.transitions;
  Matrix alpha = forward_table(em, crf);
  Matrix beta = backward_table(em, crf);
  const double log_z = partition_from_alpha(alpha, crf);

  NllGrad g;
  g.nll = log_z - sequence_score(em, crf, gold);
  g.d_emissions = Matrix(T, K);
  g.d_transitions = Matrix(K + 2, K + 2);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < K; ++k)
      g.d_emissions(t, k) = std::exp(alpha(t, k) + beta(t, k) - log_z);
  for (std::size_t k = 0; k < K; ++k) {
    g.d_transitions(crf.start(), k) = g.d_emissions(0, k);
    g.d_transitions(k, crf.stop()) = g.d_emissions(T - 1, k);
  }
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t k = 0; k < K; ++k)
        g.d_transitions(j, k) +=
            std::exp(alpha(t, j) + A(j, k) + em(t + 1, k) + beta(t + 1, k) - log_z);

  // Subtract the empirical (gold) counts.
  g.d_transitions(crf.start(), gold[0]) -= 1.0;
  g.d_transitions(gold[T - 1], crf.stop()) -= 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    g.d_emissions(t, gold[t]) -= 1.0;
    if (t + 1 < T) g.d_transitions(gold[t], gold[t + 1]) -= 1.0;
  }
  return g;
}

NllGrad softmax_nll_with_grad(const Matrix& em, std::span<const int> gold) {
  const std::size_t T = em.rows, K = em.cols;
  if (gold.size() != T) throw LengthMismatch("gold length != emission rows");
  NllGrad g;
  g.d_emissions = Matrix(T, K);
  for (std::size_t t = 0; t < T; ++t) {
    double lse = log_sum_exp(em.row(t));
    g.nll += lse - em(t, gold[t]);
    for (std::size_t k = 0; k < K; ++k) g.d_emissions(t, k) = std::exp(em(t, k) - lse);
    g.d_emissions(t, gold[t]) -= 1.0;
  }
  return g;
}

std::vector<int> softmax_decode(const Matrix& em) {
  std::vector<int> out(em.rows, 0);
  for (std::size_t t = 0; t < em.rows; ++t) {
    auto r = em.row(t);
    out[t] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

}  // namespace xbc::crf

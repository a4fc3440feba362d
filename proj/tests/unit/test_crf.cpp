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

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "xbc/annotate.hpp"
#include "xbc/crf.hpp"
#include "xbc/errors.hpp"

using namespace xbc;
using namespace xbc::crf;

TEST_CASE("sequence score") {
  Matrix em(1, 3);
  em(0, 0) = 0.3, em(0, 1) = -1.2, em(0, 2) = 2.5;
  CrfParams p(3);
  CHECK(sequence_score(em, p, std::vector<int>{2}) == 2.5);
  CHECK(sequence_score(Matrix(4, 3), p, std::vector<int>{0, 1, 2, 1}) == 0.0);
  CHECK_THROWS_AS(sequence_score(em, p, std::vector<int>{0, 1}), LengthMismatch);

  Rng rng(1);
  auto em4 = testing::random_matrix(rng, 4, 3);
  auto crf = testing::random_crf(rng, 3);
  std::vector<int> y = {2, 0, 0, 1};
  // Term-by-term: START->2, em, 2->0, em, 0->0, em, 0->1, em, 1->STOP.
  const auto& tr = crf.transitions;
  double hand = tr(3, 2) + em4(0, 2) + tr(2, 0) + em4(1, 0) + tr(0, 0) + em4(2, 0) + tr(0, 1) + em4(3, 1) + tr(1, 4);
  CHECK(sequence_score(em4, crf, y) == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("log partition closed forms") {
  Matrix em(1, 3);
  em(0, 0) = 0.5, em(0, 1) = 1.5, em(0, 2) = -2.0;
  CrfParams p(3);
  CHECK(log_partition(em, p) == doctest::Approx(std::log(std::exp(0.5) + std::exp(1.5) + std::exp(-2.0))));
  CHECK(log_partition(Matrix(5, 4), CrfParams(4)) == doctest::Approx(5 * std::log(4.0)));
}

TEST_CASE("log partition against enumeration, T=5 K=4") {
  Rng rng(2);
  auto em = testing::random_matrix(rng, 5, 4, 2.0);
  auto crf = testing::random_crf(rng, 4);
  CHECK(std::abs(log_partition(em, crf) - testing::brute_log_partition(em, crf)) < 1e-8);

  // Probabilities of all 1024 paths sum to one.
  const double z = log_partition(em, crf);
  double total = 0.0;
  testing::for_each_path(5, 4, [&](const std::vector<int>& y) { total += std::exp(sequence_score(em, crf, y) - z); });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("log_sum_exp is stable") {
  std::vector<double> big = {1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  std::vector<double> masked = {kNegInf, 0.0};
  CHECK(log_sum_exp(masked) == doctest::Approx(0.0));
}

TEST_CASE("viterbi") {
  SUBCASE("dominant emissions") {
    Matrix em(4, 3);
    std::vector<int> want = {2, 0, 1, 1};
    for (std::size_t t = 0; t < 4; ++t) em(t, want[t]) = 100.0;
    CHECK(viterbi(em, CrfParams(3)).tags == want);
  }
  SUBCASE("random instance matches exhaustive argmax") {
    Rng rng(4);
    auto em = testing::random_matrix(rng, 5, 4);
    auto crf = testing::random_crf(rng, 4);
    auto d = viterbi(em, crf);
    auto b = testing::brute_viterbi(em, crf);
    CHECK(d.score == doctest::Approx(b.score).epsilon(1e-12));
    if (b.unique) CHECK(d.tags == b.tags);
  }
  SUBCASE("ties go to the smaller label") {
    CHECK(viterbi(Matrix(3, 4), CrfParams(4)).tags == std::vector<int>{0, 0, 0});
  }
  SUBCASE("hard constraints never emit an invalid I-") {
    annotate::LabelSchema schema;
    Rng rng(6);
    for (int i = 0; i < 300; ++i) {
      auto em = testing::random_matrix(rng, 1 + rng.below(8), schema.size(), 5.0);
      auto crf = testing::random_crf(rng, schema.size(), 3.0);
      auto d = viterbi(em, crf, schema, true);
      CHECK(annotate::validate_bio(d.tags, schema).empty());
      auto mask = bio_constraint_mask(schema);
      // Constrained result is the best among valid paths (brute force on short ones).
      if (em.rows <= 3) {
        auto b = testing::brute_viterbi(em, crf, &mask);
        CHECK(d.score == doctest::Approx(b.score).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("nll") {
  SUBCASE("single label is certain") {
    Rng rng(7);
    auto em = testing::random_matrix(rng, 4, 1);
    CrfParams p(1);
    CHECK(nll(em, p, std::vector<int>{0, 0, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
    auto g = nll_with_grad(em, p, std::vector<int>{0, 0, 0, 0});
    for (double v : g.d_transitions.data) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  SUBCASE("saturated gold") {
    Matrix em(3, 3);
    std::vector<int> gold = {1, 2, 0};
    for (std::size_t t = 0; t < 3; ++t) em(t, gold[t]) = 100.0;
    CHECK(nll(em, CrfParams(3), gold) < 1e-3);
  }
  SUBCASE("composition of oracles, non-negativity, shift invariance") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
      std::size_t t_len = 1 + rng.below(5), k = 2 + rng.below(3);
      auto em = testing::random_matrix(rng, t_len, k, 3.0);
      auto crf = testing::random_crf(rng, k);
      std::vector<int> gold(t_len);
      for (auto& g : gold) g = static_cast<int>(rng.below(k));
      double v = nll(em, crf, gold);
      CHECK(v >= -1e-9);
      CHECK(v == doctest::Approx(testing::brute_log_partition(em, crf) -
                                 testing::path_score(em, crf.transitions, gold)).epsilon(1e-9));
      Matrix shifted = em;
      for (auto& x : shifted.data) x += 3.7;
      CHECK(log_partition(shifted, crf) == doctest::Approx(log_partition(em, crf) + 3.7 * t_len).epsilon(1e-12));
      CHECK(std::abs(nll(shifted, crf, gold) - v) < 1e-6);
      CHECK(viterbi(shifted, crf).tags == viterbi(em, crf).tags);
    }
  }
}

TEST_CASE("marginals and emission gradient rows") {
  Rng rng(9);
  auto em = testing::random_matrix(rng, 4, 3);
  auto crf = testing::random_crf(rng, 3);
  auto m = marginals(em, crf);
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += m(t, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Brute-force marginal at t=2, k=1.
  const double z = testing::brute_log_partition(em, crf);
  double p = 0.0;
  testing::for_each_path(4, 3, [&](const std::vector<int>& y) {
    if (y[2] == 1) p += std::exp(testing::path_score(em, crf.transitions, y) - z);
  });
  CHECK(m(2, 1) == doctest::Approx(p).epsilon(1e-10));

  auto g = nll_with_grad(em, crf, std::vector<int>{0, 2, 1, 1});
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += g.d_emissions(t, k);
    CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("analytic CRF gradients match finite differences") {
  Rng rng(10);
  auto em = testing::random_matrix(rng, 4, 3);
  auto crf = testing::random_crf(rng, 3);
  std::vector<int> gold = {1, 0, 2, 2};
  auto g = nll_with_grad(em, crf, gold);
  const double eps = 1e-5;
  for (std::size_t i = 0; i < em.data.size(); ++i) {
    Matrix a = em, b = em;
    a.data[i] += eps, b.data[i] -= eps;
    CHECK(g.d_emissions.data[i] == doctest::Approx((nll(a, crf, gold) - nll(b, crf, gold)) / (2 * eps)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < crf.transitions.data.size(); ++i) {
    if (crf.transitions.data[i] <= kNegInf) {
      CHECK(g.d_transitions.data[i] == 0.0);
      continue;
    }
    CrfParams a = crf, b = crf;
    a.transitions.data[i] += eps, b.transitions.data[i] -= eps;
    CHECK(g.d_transitions.data[i] == doctest::Approx((nll(em, a, gold) - nll(em, b, gold)) / (2 * eps)).epsilon(1e-6));
  }
}

TEST_CASE("softmax decoder") {
  Rng rng(12);
  auto em = testing::random_matrix(rng, 5, 4);
  std::vector<int> gold = {0, 1, 2, 3, 0};
  auto g = softmax_nll_with_grad(em, gold);
  double expect = 0.0;
  for (std::size_t t = 0; t < 5; ++t) {
    double z = 0.0;
    for (std::size_t k = 0; k < 4; ++k) z += std::exp(em(t, k));
    expect += std::log(z) - em(t, gold[t]);
  }
  CHECK(g.nll == doctest::Approx(expect).epsilon(1e-12));
  auto d = softmax_decode(em);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 4; ++k) CHECK(em(t, d[t]) >= em(t, k));
}

TEST_CASE("parameter validation") {
  CrfParams p(3);
  CHECK_NOTHROW(p.validate());
  p.transitions(0, 0) = std::nan("");
  CHECK_THROWS(p.validate());
  CrfParams q(3);
  q.transitions = Matrix(4, 4);
  CHECK_THROWS_AS(q.validate(), ShapeMismatch);
}

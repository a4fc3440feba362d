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

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xbc/annotate.hpp"

namespace xbc::eval {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  Counts& operator+=(const Counts& o) {
    tp += o.tp, fp += o.fp, fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  Counts counts;
};

// Zero-division policy: P = 0 with no predictions, R = 0 with no gold
// spans, F1 = 0 when P + R = 0.
Prf prf_from_counts(const Counts& c);

struct EvalReport {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double token_accuracy = 0.0;
  Counts counts;
  std::map<std::string, Prf> per_type;
  std::map<std::string, Prf> per_lang;
  std::map<std::string, std::size_t> support;  // gold spans per type
  std::size_t bio_violations = 0;              // in the predictions
  std::size_t tokens = 0;
};

// Exact (start, end, type) span matching, micro-averaged. gold[i] and
// pred[i] must share record_id and length; throws AlignmentError.
EvalReport span_prf(std::span<const annotate::TaggedSequence> gold,
                    std::span<const annotate::TaggedSequence> pred,
                    const annotate::LabelSchema& schema);

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

// Metric name -> value; nullopt renders as "-".
using MetricRow = std::map<std::string, std::optional<double>>;
MetricRow metric_row(const EvalReport& r);

struct AccuracyMatrix {
  std::vector<std::string> columns;
  std::vector<std::string> variants;  // sorted by name
  std::vector<std::vector<std::optional<double>>> cells;

  std::string render_text() const;
  nlohmann::json to_json() const;
};

// Formats a fraction as a percentage the way the comparison table does:
// 0.701 -> "70.1%", 0.58 -> "58%", missing -> "-".
std::string format_percent(std::optional<double> v);

AccuracyMatrix accuracy_matrix(const std::map<std::string, MetricRow>& results);
AccuracyMatrix accuracy_matrix(const std::map<std::string, EvalReport>& results);

}  // namespace xbc::eval

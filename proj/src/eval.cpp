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

#include "xbc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "xbc/errors.hpp"

namespace xbc::eval {

using nlohmann::json;

Prf prf_from_counts(const Counts& c) {
  Prf p;
  p.counts = c;
  p.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  p.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
  return p;
}

EvalReport span_prf(std::span<const annotate::TaggedSequence> gold,
                    std::span<const annotate::TaggedSequence> pred,
                    const annotate::LabelSchema& schema) {
  if (gold.size() != pred.size())
    throw AlignmentError(std::to_string(gold.size()) + " gold vs " + std::to_string(pred.size()) +
                         " predicted sequences");
  std::map<std::string, Counts> by_type, by_lang;
  for (const auto& t : schema.entity_types()) by_type[t];
  EvalReport r;
  std::size_t correct_tokens = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    const auto& p = pred[i];
    if (g.record_id != p.record_id)
      throw AlignmentError("sequence " + std::to_string(i) + ": record ids differ");
    if (g.labels.size() != p.labels.size())
      throw AlignmentError("record " + std::to_string(g.record_id) + ": lengths differ");
    for (std::size_t t = 0; t < g.labels.size(); ++t) correct_tokens += g.labels[t] == p.labels[t];
    r.tokens += g.labels.size();
    r.bio_violations += annotate::validate_bio(p.labels, schema).size();

    auto gs = annotate::spans_of(g.labels, schema);
    auto ps = annotate::spans_of(p.labels, schema);
    auto key = [](const annotate::Span& s) {
      return std::tuple(s.start_token, s.end_token, s.entity_type);
    };
    std::set<std::tuple<std::size_t, std::size_t, std::string>> gold_set, pred_set;
    for (const auto& s : gs) gold_set.insert(key(s));
    for (const auto& s : ps) pred_set.insert(key(s));
    Counts& lang = by_lang[g.lang];
    for (const auto& s : pred_set) {
      Counts& c = by_type[std::get<2>(s)];
      if (gold_set.count(s)) ++c.tp, ++lang.tp;
      else ++c.fp, ++lang.fp;
    }
    for (const auto& s : gold_set) {
      if (!pred_set.count(s)) ++by_type[std::get<2>(s)].fn, ++lang.fn;
      ++r.support[std::get<2>(s)];
    }
  }
  for (const auto& [type, c] : by_type) {
    r.counts += c;
    r.per_type[type] = prf_from_counts(c);
    r.support[type];
  }
  for (const auto& [lang, c] : by_lang) r.per_lang[lang] = prf_from_counts(c);
  Prf overall = prf_from_counts(r.counts);
  r.precision = overall.precision;
  r.recall = overall.recall;
  r.f1 = overall.f1;
  r.token_accuracy = r.tokens ? static_cast<double>(correct_tokens) / static_cast<double>(r.tokens) : 0.0;
  return r;
}

static json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"tp", p.counts.tp},        {"fp", p.counts.fp},  {"fn", p.counts.fn}};
}

static Prf prf_from(const json& j) {
  Prf p;
  p.precision = j.at("precision").get<double>();
  p.recall = j.at("recall").get<double>();
  p.f1 = j.at("f1").get<double>();
  p.counts = {j.value("tp", std::size_t{0}), j.value("fp", std::size_t{0}), j.value("fn", std::size_t{0})};
  return p;
}

json to_json(const EvalReport& r) {
  json per_type = json::object(), per_lang = json::object();
  for (const auto& [k, v] : r.per_type) per_type[k] = prf_json(v);
  for (const auto& [k, v] : r.per_lang) per_lang[k] = prf_json(v);
  return {{"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"token_accuracy", r.token_accuracy},
          {"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"fn", r.counts.fn},
          {"tokens", r.tokens},
          {"bio_violations", r.bio_violations},
          {"support", r.support},
          {"per_type", per_type},
          {"per_lang", per_lang}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.token_accuracy = j.value("token_accuracy", 0.0);
  r.counts = {j.value("tp", std::size_t{0}), j.value("fp", std::size_t{0}), j.value("fn", std::size_t{0})};
  r.tokens = j.value("tokens", std::size_t{0});
  r.bio_violations = j.value("bio_violations", std::size_t{0});
  r.support = j.value("support", std::map<std::string, std::size_t>{});
  if (j.contains("per_type"))
    for (auto& [k, v] : j["per_type"].items()) r.per_type[k] = prf_from(v);
  if (j.contains("per_lang"))
    for (auto& [k, v] : j["per_lang"].items()) r.per_lang[k] = prf_from(v);
  return r;
}

MetricRow metric_row(const EvalReport& r) {
  return {{"accuracy", r.token_accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

std::string format_percent(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s + "%";
}

AccuracyMatrix accuracy_matrix(const std::map<std::string, MetricRow>& results) {
  static const std::vector<std::string> preferred = {"accuracy", "precision", "recall", "f1"};
  AccuracyMatrix m;
  std::set<std::string> names;
  for (const auto& [v, row] : results)
    for (const auto& [k, val] : row) names.insert(k);
  for (const auto& p : preferred)
    if (names.erase(p)) m.columns.push_back(p);
  for (const auto& n : names) m.columns.push_back(n);
  for (const auto& [variant, row] : results) {
    m.variants.push_back(variant);
    std::vector<std::optional<double>> cells;
    for (const auto& c : m.columns) {
      auto it = row.find(c);
      cells.push_back(it == row.end() ? std::nullopt : it->second);
    }
    m.cells.push_back(std::move(cells));
  }
  return m;
}

AccuracyMatrix accuracy_matrix(const std::map<std::string, EvalReport>& results) {
  std::map<std::string, MetricRow> rows;
  for (const auto& [k, r] : results) rows[k] = metric_row(r);
  return accuracy_matrix(rows);
}

std::string AccuracyMatrix::render_text() const {
  const std::string corner = "Algorithm/Metric";
  std::vector<std::size_t> width(columns.size() + 1, corner.size());
  for (const auto& v : variants) width[0] = std::max(width[0], v.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    width[c + 1] = columns[c].size();
    for (const auto& row : cells) width[c + 1] = std::max(width[c + 1], format_percent(row[c]).size());
  }
  std::ostringstream out;
  auto pad = [&](const std::string& s, std::size_t w, bool left) {
    std::string fill(w - s.size(), ' ');
    out << (left ? s + fill : fill + s);
  };
  pad(corner, width[0], true);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << "  ";
    pad(columns[c], width[c + 1], false);
  }
  out << '\n';
  for (std::size_t r = 0; r < variants.size(); ++r) {
    pad(variants[r], width[0], true);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << "  ";
      pad(format_percent(cells[r][c]), width[c + 1], false);
    }
    out << '\n';
  }
  return out.str();
}

json AccuracyMatrix::to_json() const {
  json rows = json::array();
  for (std::size_t r = 0; r < variants.size(); ++r) {
    json vals = json::object();
    for (std::size_t c = 0; c < columns.size(); ++c)
      vals[columns[c]] = cells[r][c] ? json(*cells[r][c]) : json(nullptr);
    rows.push_back({{"variant", variants[r]}, {"metrics", vals}});
  }
  return {{"columns", columns}, {"rows", rows}};
}

}  // namespace xbc::eval

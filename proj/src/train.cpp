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

#include "xbc/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>

#include "xbc/errors.hpp"
#include "xbc/eval.hpp"
#include "xbc/hash.hpp"

namespace xbc::model {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate must be a finite value >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (hidden_size < 1) throw ConfigError("train.hidden_size must be >= 1");
  if (max_seq_len < 1) throw ConfigError("train.max_seq_len must be >= 1");
  if (grad_clip_norm < 0.0) throw ConfigError("train.grad_clip_norm must be >= 0");
}

namespace {

std::vector<Matrix*> tensors(Params& p) {
  std::vector<Matrix*> out;
  p.for_each([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

void check_sequence(const annotate::TaggedSequence& s, std::size_t k) {
  if (s.labels.size() != s.token_texts.size())
    throw LengthMismatch("record " + std::to_string(s.record_id) + ": labels and tokens differ in length");
  for (int l : s.labels)
    if (l < 0 || static_cast<std::size_t>(l) >= k)
      throw LabelOutOfRange("record " + std::to_string(s.record_id) + ": label id " + std::to_string(l));
}

}  // namespace

std::vector<annotate::TaggedSequence> split_long_sequences(
    std::span<const annotate::TaggedSequence> data, std::size_t max_len,
    const annotate::LabelSchema& schema, std::size_t* dropped) {
  std::vector<annotate::TaggedSequence> out;
  for (const auto& s : data) {
    if (s.token_texts.size() <= max_len) {
      out.push_back(s);
      continue;
    }
    std::vector<int> labels = s.labels;
    for (const auto& span : annotate::spans_of(labels, schema)) {
      bool crosses = span.start_token / max_len != (span.end_token - 1) / max_len;
      if (!crosses) continue;
      for (std::size_t i = span.start_token; i < span.end_token; ++i) labels[i] = 0;
      if (dropped) ++*dropped;
    }
    for (std::size_t b = 0; b < s.token_texts.size(); b += max_len) {
      std::size_t e = std::min(s.token_texts.size(), b + max_len);
      annotate::TaggedSequence chunk;
      chunk.record_id = s.record_id;
      chunk.lang = s.lang;
      chunk.token_texts.assign(s.token_texts.begin() + b, s.token_texts.begin() + e);
      chunk.labels.assign(labels.begin() + b, labels.begin() + e);
      out.push_back(std::move(chunk));
    }
  }
  return out;
}

std::set<std::uint64_t> choose_dev_ids(std::vector<std::uint64_t> ids, double fraction,
                                       std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng rng(sub_seed(seed, "dev_split"));
  rng.shuffle(ids);
  std::size_t n_dev = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size())));
  // At least one id always stays in training.
  n_dev = ids.empty() ? 0 : std::min(n_dev, ids.size() - 1);
  return {ids.begin(), ids.begin() + static_cast<long>(n_dev)};
}

double mean_loss(const SequenceModel& model, std::span<const annotate::TaggedSequence> data) {
  if (data.empty()) return 0.0;
  std::vector<double> losses(data.size());
  const long n = static_cast<long>(data.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) losses[i] = model.loss(data[i].token_texts, data[i].labels);
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(data.size());
}

std::vector<annotate::TaggedSequence> predict(const SequenceModel& model,
                                              std::span<const annotate::TaggedSequence> data) {
  std::vector<annotate::TaggedSequence> out(data.begin(), data.end());
  const long n = static_cast<long>(data.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i)
    if (!out[i].token_texts.empty()) out[i].labels = model.decode(out[i].token_texts);
  return out;
}

BatchGrad batch_gradient(const SequenceModel& model,
                         std::span<const annotate::TaggedSequence* const> batch, Exec exec) {
  std::vector<std::vector<std::string>> texts;
  texts.reserve(batch.size());
  for (const auto* s : batch) texts.push_back(s->token_texts);
  std::vector<Matrix> embedded = model.embedder().embed_batch(texts, model.params().embed_table);

  std::vector<SequenceGrad> grads(batch.size());
  const long n = static_cast<long>(batch.size());
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i)
      grads[i] = model.loss_and_grad(batch[i]->token_texts, batch[i]->labels, &embedded[i]);
  } else {
    for (long i = 0; i < n; ++i)
      grads[i] = model.loss_and_grad(batch[i]->token_texts, batch[i]->labels, &embedded[i]);
  }

  BatchGrad out;
  out.grad = model.params().zeros_like();
  auto dst = tensors(out.grad);
  for (auto& g : grads) {
    out.losses.push_back(g.loss);
    out.loss_sum += g.loss;
    auto src = tensors(g.grad);
    for (std::size_t k = 1; k < dst.size(); ++k)  // k = 0 is the embedding table
      for (std::size_t i = 0; i < dst[k]->size(); ++i) dst[k]->data[i] += src[k]->data[i];
    for (std::size_t t = 0; t < g.embed_rows.size(); ++t) {
      auto row = out.grad.embed_table.row(g.embed_rows[t]);
      auto d = g.d_embed.row(t);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += d[c];
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto* m : dst)
    for (double& v : m->data) v *= scale;
  return out;
}

Optimizer::Optimizer(const TrainConfig& config, const Params& shape)
    : config_(config), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

void Optimizer::step(Params& params, Params& grad) {
  auto p = tensors(params);
  auto g = tensors(grad);
  double sq = 0.0;
  for (auto* m : g)
    for (double v : m->data) sq += v * v;
  last_norm_ = std::sqrt(sq);
  if (config_.grad_clip_norm > 0 && last_norm_ > config_.grad_clip_norm) {
    const double s = config_.grad_clip_norm / last_norm_;
    for (auto* m : g)
      for (double& v : m->data) v *= s;
  }
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < p.size(); ++k)
      for (std::size_t i = 0; i < p[k]->size(); ++i) p[k]->data[i] -= lr * g[k]->data[i];
  } else {
    ++t_;
    auto m = tensors(m_);
    auto v = tensors(v_);
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < p.size(); ++k) {
      for (std::size_t i = 0; i < p[k]->size(); ++i) {
        const double gi = g[k]->data[i];
        double& mi = m[k]->data[i];
        double& vi = v[k]->data[i];
        mi = b1 * mi + (1.0 - b1) * gi;
        vi = b2 * vi + (1.0 - b2) * gi * gi;
        if (mi == 0.0) continue;  // untouched rows stay bit-identical
        p[k]->data[i] -= lr * (mi / c1) / (std::sqrt(vi / c2) + config_.epsilon);
      }
    }
  }
  params.crf.apply_mask();
}

TrainResult train(std::span<const annotate::TaggedSequence> dataset,
                  std::span<const annotate::TaggedSequence> dev, const TrainConfig& config,
                  const annotate::LabelSchema& schema, const embed::EmbedderConfig& embedder,
                  const preprocess::ResourceSet* resources) {
  return train(dataset, dev, config,
               SequenceModel::create(schema, embedder, config.model_config(), sub_seed(config.seed, "init")),
               resources);
}

TrainResult train(std::span<const annotate::TaggedSequence> dataset,
                  std::span<const annotate::TaggedSequence> dev, const TrainConfig& config,
                  SequenceModel initial, const preprocess::ResourceSet* resources) {
  config.validate();
  if (dataset.empty()) throw EmptyDataset("training set is empty");
  const auto& schema = initial.schema();
  for (const auto& s : dataset) check_sequence(s, schema.size());
  for (const auto& s : dev) check_sequence(s, schema.size());

  std::size_t dropped = 0;
  auto data = split_long_sequences(dataset, config.max_seq_len, schema, &dropped);
  auto devs = split_long_sequences(dev, config.max_seq_len, schema);
  if (dropped)
    std::cerr << "warning: " << dropped << " span(s) crossed a " << config.max_seq_len
              << "-token split and were dropped\n";
  std::erase_if(data, [](const auto& s) { return s.token_texts.empty(); });
  std::erase_if(devs, [](const auto& s) { return s.token_texts.empty(); });
  if (data.empty()) throw EmptyDataset("training set holds no tokens");

  if (!config.augment.empty()) {
    if (!resources) throw MissingSynonymTable("augmentation requested without language resources");
    const std::size_t original = data.size();
    const std::uint64_t aug_seed = sub_seed(config.seed, "augment");
    for (std::size_t i = 0; i < original; ++i) {
      for (auto mode : config.augment) {
        auto extra = augment::augment(data[i], mode, resources->get(data[i].lang), aug_seed ^ i,
                                      config.augment_copies);
        for (auto& e : extra) data.push_back(std::move(e));
      }
    }
  }

  const auto& selection = devs.empty() ? data : devs;
  ModelConfig mc = initial.config();
  mc.hard_bio_constraints = config.hard_bio_constraints;
  initial.config() = mc;

  TrainResult result{initial, {}, 0, dropped};
  SequenceModel& model = initial;
  Optimizer opt(config, model.params());
  Rng rng(sub_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> losses(data.size());

  double best_f1 = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::size_t e = std::min(order.size(), b + config.batch_size);
      std::vector<const annotate::TaggedSequence*> batch;
      for (std::size_t i = b; i < e; ++i) batch.push_back(&data[order[i]]);
      BatchGrad bg = batch_gradient(model, batch, config.exec);
      for (std::size_t i = b; i < e; ++i) losses[order[i]] = bg.losses[i - b];
      opt.step(model.params(), bg.grad);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_nll = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(data.size());
    st.dev_f1 = eval::span_prf(selection, predict(model, selection), schema).f1;
    st.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(st);
    if (st.dev_f1 > best_f1) {
      best_f1 = st.dev_f1;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.early_stop_patience && ++since_best >= config.early_stop_patience) {
      break;
    }
  }
  if (result.history.empty()) result.model = model;
  return result;
}

void write_history(const std::filesystem::path& path, std::span<const EpochStats> history) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  for (const auto& h : history)
    out << nlohmann::json{{"epoch", h.epoch}, {"train_nll", h.train_nll}, {"dev_f1", h.dev_f1},
                          {"wall_ms", h.wall_ms}}
               .dump()
        << '\n';
}

}  // namespace xbc::model

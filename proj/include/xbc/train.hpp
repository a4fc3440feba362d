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
#include <set>
#include <span>
#include <vector>

#include "xbc/annotate.hpp"
#include "xbc/augment.hpp"
#include "xbc/embed.hpp"
#include "xbc/parallel.hpp"
#include "xbc/preprocess.hpp"
#include "xbc/sequence_model.hpp"

namespace xbc::model {

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t epochs = 60;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  double grad_clip_norm = 5.0;  // 0 = off
  std::size_t early_stop_patience = 10;  // 0 = never stop early
  std::set<augment::Mode> augment;
  std::size_t augment_copies = 1;
  bool hard_bio_constraints = true;
  std::size_t hidden_size = 32;
  Decoder decoder = Decoder::kCrf;
  std::size_t max_seq_len = 256;
  Exec exec = Exec::kParallel;

  // learning_rate may be 0 here (a no-op run); the config loader insists
  // on > 0.
  void validate() const;
  ModelConfig model_config() const { return {hidden_size, decoder, hard_bio_constraints}; }
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double dev_f1 = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  SequenceModel model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  std::size_t dropped_boundary_spans = 0;
};

// Splits sequences longer than max_len at token boundaries. Spans crossing
// a split point are relabelled O; their count is added to *dropped.
std::vector<annotate::TaggedSequence> split_long_sequences(
    std::span<const annotate::TaggedSequence> data, std::size_t max_len,
    const annotate::LabelSchema& schema, std::size_t* dropped = nullptr);

// Seeded, order-independent dev selection over the distinct record ids.
std::set<std::uint64_t> choose_dev_ids(std::vector<std::uint64_t> ids, double fraction,
                                       std::uint64_t seed);

// Mean NLL over a dataset, summed in index order.
double mean_loss(const SequenceModel& model, std::span<const annotate::TaggedSequence> data);

std::vector<annotate::TaggedSequence> predict(const SequenceModel& model,
                                              std::span<const annotate::TaggedSequence> data);

// Sum of per-sequence gradients of one batch, divided by the batch size.
// The parallel path computes sequences concurrently and reduces them in
// batch-index order, so both paths return bit-identical results.
struct BatchGrad {
  double loss_sum = 0.0;
  std::vector<double> losses;
  Params grad;
};
BatchGrad batch_gradient(const SequenceModel& model,
                         std::span<const annotate::TaggedSequence* const> batch, Exec exec);

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const Params& shape);
  // Clips, then applies one update step in place.
  void step(Params& params, Params& grad);
  double last_grad_norm() const { return last_norm_; }

 private:
  TrainConfig config_;
  Params m_, v_;
  std::size_t t_ = 0;
  double last_norm_ = 0.0;
};

// Mini-batch training with per-epoch dev span-F1, early stopping, and
// best-dev model selection. Deterministic given config.seed.
TrainResult train(std::span<const annotate::TaggedSequence> dataset,
                  std::span<const annotate::TaggedSequence> dev, const TrainConfig& config,
                  const annotate::LabelSchema& schema, const embed::EmbedderConfig& embedder,
                  const preprocess::ResourceSet* resources = nullptr);

// Continues training an existing model.
TrainResult train(std::span<const annotate::TaggedSequence> dataset,
                  std::span<const annotate::TaggedSequence> dev, const TrainConfig& config,
                  SequenceModel initial, const preprocess::ResourceSet* resources = nullptr);

void write_history(const std::filesystem::path& path, std::span<const EpochStats> history);

}  // namespace xbc::model

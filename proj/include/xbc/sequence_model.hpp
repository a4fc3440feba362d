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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xbc/annotate.hpp"
#include "xbc/crf.hpp"
#include "xbc/embed.hpp"
#include "xbc/gru.hpp"
#include "xbc/matrix.hpp"

namespace xbc::model {

enum class Decoder { kCrf, kSoftmax };

std::string to_string(Decoder d);
Decoder parse_decoder(std::string_view s);

struct ModelConfig {
  std::size_t hidden_size = 32;
  Decoder decoder = Decoder::kCrf;
  bool hard_bio_constraints = true;
};

// Every learnable tensor. The embedding table is 0 x D for frozen backends.
struct Params {
  Matrix embed_table;
  gru::GruParams gru;
  Matrix emit_w;  // 2H x K
  Matrix emit_b;  // 1 x K
  crf::CrfParams crf;

  template <typename F>
  void for_each(F&& f) {
    f(std::string("embed.table"), embed_table);
    gru.fwd.for_each([&](const char* n, Matrix& m) { f(std::string("gru.fwd.") + n, m); });
    gru.bwd.for_each([&](const char* n, Matrix& m) { f(std::string("gru.bwd.") + n, m); });
    f(std::string("emit.w"), emit_w);
    f(std::string("emit.b"), emit_b);
    f(std::string("crf.transitions"), crf.transitions);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<Params*>(this)->for_each(
        [&](const std::string& n, Matrix& m) { f(n, static_cast<const Matrix&>(m)); });
  }

  // Same shapes, all zeros (masks included).
  Params zeros_like() const;
  std::size_t parameter_count() const;
};

// Row-wise affine map H W + b.
Matrix emissions(const Matrix& hidden, const Matrix& w, const Matrix& b);

struct SequenceGrad {
  double loss = 0.0;
  Params grad;                          // embed_table left empty
  std::vector<std::size_t> embed_rows;  // trainable table row per token
  Matrix d_embed;                       // T x D
};

class SequenceModel {
 public:
  // Fresh model: hashed table from the embedder seed, GRU and emission
  // weights uniform in +-1/sqrt(fan), zero CRF transitions.
  static SequenceModel create(annotate::LabelSchema schema, embed::EmbedderConfig embedder,
                              ModelConfig config, std::uint64_t seed);

  SequenceModel(annotate::LabelSchema schema, embed::EmbedderConfig embedder_config,
                ModelConfig config, Params params,
                std::shared_ptr<const embed::Embedder> embedder = nullptr);

  const annotate::LabelSchema& schema() const { return schema_; }
  const embed::EmbedderConfig& embedder_config() const { return embedder_config_; }
  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }
  const embed::Embedder& embedder() const { return *embedder_; }

  Matrix embed(std::span<const std::string> tokens) const;
  Matrix emissions(std::span<const std::string> tokens) const;
  Matrix emissions_from(const Matrix& embedded) const;

  std::vector<int> decode(std::span<const std::string> tokens) const;
  std::vector<int> decode_emissions(const Matrix& em) const;

  double loss(std::span<const std::string> tokens, std::span<const int> gold) const;
  double loss_from(const Matrix& embedded, std::span<const int> gold) const;

  // Loss and exact gradient for one sequence. `embedded`, when given,
  // replaces the embedder lookup (the remote backend pre-fetches batches).
  SequenceGrad loss_and_grad(std::span<const std::string> tokens, std::span<const int> gold,
                             const Matrix* embedded = nullptr) const;

  // Throws ModelFormatError / ShapeMismatch when any invariant is broken.
  void validate() const;

  // FNV-1a over tensor names and raw parameter bytes.
  std::uint64_t hash() const;

 private:
  annotate::LabelSchema schema_;
  embed::EmbedderConfig embedder_config_;
  ModelConfig config_;
  Params params_;
  std::shared_ptr<const embed::Embedder> embedder_;
};

inline constexpr int kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const SequenceModel& model);
SequenceModel load_model(const std::filesystem::path& path);

}  // namespace xbc::model

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
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "xbc/matrix.hpp"
#include "xbc/preprocess.hpp"

namespace xbc::embed {

enum class Backend { kHashed, kTable, kRemote };
enum class TextChannel { kNormalized, kLemma, kStem };

struct EmbedderConfig {
  Backend backend = Backend::kHashed;
  std::size_t dim = 32;
  std::size_t vocab_buckets = 4096;
  std::uint64_t seed = 0;
  TextChannel text_channel = TextChannel::kNormalized;
  std::string endpoint;      // remote: http://host:port
  std::string vectors_path;  // table: vector file
  std::size_t max_batch = 32;

  void validate() const;
  bool operator==(const EmbedderConfig&) const = default;
};

std::string to_string(Backend b);
std::string to_string(TextChannel c);
Backend parse_backend(std::string_view s);
TextChannel parse_channel(std::string_view s);
nlohmann::json to_json(const EmbedderConfig& c);
EmbedderConfig embedder_config_from_json(const nlohmann::json& j);

const std::string& channel_text(const preprocess::Token& t, TextChannel channel);
std::vector<std::string> channel_texts(const preprocess::PreprocessedDoc& doc, TextChannel channel);

inline constexpr double kInitRange = 0.1;

// FNV-1a(token) mod buckets.
std::size_t hashed_bucket(std::string_view token, std::size_t buckets);

// buckets x dim table, entry (r, c) = uniform[-0.1, 0.1] drawn from the
// counter-based generator at counter r * dim + c.
Matrix init_hashed_table(const EmbedderConfig& config);

// Maps token sequences to T x D matrices. Trainable backends read from a
// parameter table owned by the model; frozen ones ignore it.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual Matrix embed(std::span<const std::string> tokens, const Matrix& table) const = 0;

  virtual std::vector<Matrix> embed_batch(std::span<const std::vector<std::string>> batch,
                                          const Matrix& table) const;

  // Table row per token for trainable backends; empty when frozen.
  virtual std::vector<std::size_t> rows(std::span<const std::string> tokens) const {
    (void)tokens;
    return {};
  }

  // Initial trainable table (0 x dim for frozen backends).
  virtual Matrix initial_table() const { return Matrix(0, config_.dim); }

  const EmbedderConfig& config() const { return config_; }

 protected:
  explicit Embedder(EmbedderConfig config) : config_(std::move(config)) {}
  EmbedderConfig config_;
};

class HashedEmbedder : public Embedder {
 public:
  explicit HashedEmbedder(EmbedderConfig config);
  Matrix embed(std::span<const std::string> tokens, const Matrix& table) const override;
  std::vector<std::size_t> rows(std::span<const std::string> tokens) const override;
  Matrix initial_table() const override { return init_hashed_table(config_); }
};

inline constexpr const char* kOovToken = "<OOV>";

class TableEmbedder : public Embedder {
 public:
  // Loads the vector file named by config.vectors_path.
  explicit TableEmbedder(EmbedderConfig config);
  TableEmbedder(EmbedderConfig config, std::unordered_map<std::string, std::size_t> index,
                Matrix vectors);
  Matrix embed(std::span<const std::string> tokens, const Matrix& table) const override;

 private:
  std::unordered_map<std::string, std::size_t> index_;
  Matrix vectors_;
  std::size_t oov_row_ = 0;
};

// Request body {"tokens": [[...], ...]}.
nlohmann::json make_embed_request(std::span<const std::vector<std::string>> batch);
// Validates {"vectors": [[[...]]], "dim": D} against the request shape and
// the configured dim. Throws ShapeMismatch.
std::vector<Matrix> parse_embed_response(const nlohmann::json& response,
                                         std::span<const std::vector<std::string>> batch,
                                         std::size_t dim);

class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig config);
  ~RemoteEmbedder() override;
  Matrix embed(std::span<const std::string> tokens, const Matrix& table) const override;
  std::vector<Matrix> embed_batch(std::span<const std::vector<std::string>> batch,
                                  const Matrix& table) const override;

 private:
  std::vector<Matrix> post(std::span<const std::vector<std::string>> chunk) const;

  struct Client;
  std::unique_ptr<Client> client_;
  mutable std::mutex mu_;  // one request in flight per instance
  mutable std::unordered_map<std::string, Matrix> cache_;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config);

// Stand-alone embedding: builds the backend (with a fresh seeded table for
// hashed) and embeds one sequence. Throws EmptySequence on empty input.
Matrix embed_tokens(std::span<const std::string> tokens, const EmbedderConfig& config);

// Serves POST /embed over a frozen copy of an embedder and its table.
class EmbedService {
 public:
  EmbedService(std::shared_ptr<const Embedder> embedder, Matrix table);
  ~EmbedService();
  // Binds to host:port (port 0 picks a free one) and serves on a
  // background thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xbc::embed

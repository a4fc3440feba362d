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

#include "xbc/embed.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "xbc/errors.hpp"
#include "xbc/hash.hpp"

namespace xbc::embed {

using nlohmann::json;

void EmbedderConfig::validate() const {
  if (dim == 0) throw ConfigError("embedder.dim must be > 0");
  if (backend == Backend::kHashed && vocab_buckets == 0)
    throw ConfigError("embedder.vocab_buckets must be > 0 for the hashed backend");
  if (backend == Backend::kRemote && endpoint.empty())
    throw ConfigError("embedder.endpoint is required for the remote backend");
  if (backend == Backend::kTable && vectors_path.empty())
    throw ConfigError("embedder.vectors is required for the table backend");
  if (max_batch == 0) throw ConfigError("embedder.max_batch must be > 0");
}

std::string to_string(Backend b) {
  switch (b) {
    case Backend::kHashed: return "hashed";
    case Backend::kTable: return "table";
    case Backend::kRemote: return "remote";
  }
  return "?";
}

std::string to_string(TextChannel c) {
  switch (c) {
    case TextChannel::kNormalized: return "normalized";
    case TextChannel::kLemma: return "lemma";
    case TextChannel::kStem: return "stem";
  }
  return "?";
}

Backend parse_backend(std::string_view s) {
  if (s == "hashed") return Backend::kHashed;
  if (s == "table") return Backend::kTable;
  if (s == "remote") return Backend::kRemote;
  throw ConfigError("unknown embedder backend '" + std::string(s) + "'");
}

TextChannel parse_channel(std::string_view s) {
  if (s == "normalized") return TextChannel::kNormalized;
  if (s == "lemma") return TextChannel::kLemma;
  if (s == "stem") return TextChannel::kStem;
  throw ConfigError("unknown text_channel '" + std::string(s) + "'");
}

json to_json(const EmbedderConfig& c) {
  return {{"backend", to_string(c.backend)},     {"dim", c.dim},
          {"vocab_buckets", c.vocab_buckets},    {"seed", std::to_string(c.seed)},
          {"text_channel", to_string(c.text_channel)}, {"endpoint", c.endpoint},
          {"vectors", c.vectors_path},           {"max_batch", c.max_batch}};
}

EmbedderConfig embedder_config_from_json(const json& j) {
  EmbedderConfig c;
  c.backend = parse_backend(j.at("backend").get<std::string>());
  c.dim = j.at("dim").get<std::size_t>();
  c.vocab_buckets = j.at("vocab_buckets").get<std::size_t>();
  const auto& seed = j.at("seed");
  c.seed = seed.is_string() ? std::stoull(seed.get<std::string>()) : seed.get<std::uint64_t>();
  c.text_channel = parse_channel(j.at("text_channel").get<std::string>());
  c.endpoint = j.value("endpoint", "");
  c.vectors_path = j.value("vectors", "");
  c.max_batch = j.value("max_batch", std::size_t{32});
  return c;
}

const std::string& channel_text(const preprocess::Token& t, TextChannel channel) {
  switch (channel) {
    case TextChannel::kLemma: return t.lemma;
    case TextChannel::kStem: return t.stem;
    case TextChannel::kNormalized: break;
  }
  return t.normalized;
}

std::vector<std::string> channel_texts(const preprocess::PreprocessedDoc& doc, TextChannel channel) {
  std::vector<std::string> out;
  out.reserve(doc.tokens.size());
  for (const auto& t : doc.tokens) out.push_back(channel_text(t, channel));
  return out;
}

std::size_t hashed_bucket(std::string_view token, std::size_t buckets) {
  return static_cast<std::size_t>(fnv1a64(token) % buckets);
}

Matrix init_hashed_table(const EmbedderConfig& config) {
  Matrix table(config.vocab_buckets, config.dim);
  for (std::size_t i = 0; i < table.size(); ++i)
    table.data[i] = -kInitRange + 2.0 * kInitRange * counter_uniform(config.seed, i);
  return table;
}

std::vector<Matrix> Embedder::embed_batch(std::span<const std::vector<std::string>> batch,
                                          const Matrix& table) const {
  std::vector<Matrix> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) out.push_back(embed(seq, table));
  return out;
}

HashedEmbedder::HashedEmbedder(EmbedderConfig config) : Embedder(std::move(config)) {
  config_.validate();
}

std::vector<std::size_t> HashedEmbedder::rows(std::span<const std::string> tokens) const {
  std::vector<std::size_t> r;
  r.reserve(tokens.size());
  for (const auto& t : tokens) r.push_back(hashed_bucket(t, config_.vocab_buckets));
  return r;
}

Matrix HashedEmbedder::embed(std::span<const std::string> tokens, const Matrix& table) const {
  if (tokens.empty()) throw EmptySequence("cannot embed an empty token list");
  if (table.rows != config_.vocab_buckets || table.cols != config_.dim)
    throw ShapeMismatch("hashed table shape does not match embedder config");
  Matrix out(tokens.size(), config_.dim);
  auto r = rows(tokens);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto src = table.row(r[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

static std::pair<std::unordered_map<std::string, std::size_t>, Matrix> load_vectors(
    const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read vector file " + path);
  std::size_t vocab = 0, file_dim = 0;
  {
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    if (!(hs >> vocab >> file_dim)) throw ConfigError("vector file header must be '<vocab> <dim>'");
  }
  if (file_dim != dim)
    throw ShapeMismatch("vector file dim " + std::to_string(file_dim) + " != config dim " +
                        std::to_string(dim));
  std::unordered_map<std::string, std::size_t> index;
  Matrix vectors(vocab, dim);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= vocab) throw ConfigError("vector file has more rows than its header declares");
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    for (std::size_t c = 0; c < dim; ++c)
      if (!(ls >> vectors(row, c))) throw ConfigError("short vector row for token " + token);
    index[token] = row++;
  }
  if (row != vocab) throw ConfigError("vector file declares " + std::to_string(vocab) +
                                      " rows but holds " + std::to_string(row));
  if (!vectors.all_finite()) throw ConfigError("vector file holds non-finite values");
  return {std::move(index), std::move(vectors)};
}

TableEmbedder::TableEmbedder(EmbedderConfig config) : Embedder(std::move(config)) {
  config_.validate();
  auto [index, vectors] = load_vectors(config_.vectors_path, config_.dim);
  *this = TableEmbedder(config_, std::move(index), std::move(vectors));
}

TableEmbedder::TableEmbedder(EmbedderConfig config,
                             std::unordered_map<std::string, std::size_t> index, Matrix vectors)
    : Embedder(std::move(config)), index_(std::move(index)), vectors_(std::move(vectors)) {
  auto it = index_.find(kOovToken);
  if (it == index_.end()) throw OovNotConfigured("vector table lacks an <OOV> row");
  oov_row_ = it->second;
  if (vectors_.cols != config_.dim) throw ShapeMismatch("vector table dim mismatch");
}

Matrix TableEmbedder::embed(std::span<const std::string> tokens, const Matrix&) const {
  if (tokens.empty()) throw EmptySequence("cannot embed an empty token list");
  Matrix out(tokens.size(), config_.dim);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto it = index_.find(tokens[t]);
    auto src = vectors_.row(it == index_.end() ? oov_row_ : it->second);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

json make_embed_request(std::span<const std::vector<std::string>> batch) {
  json tokens = json::array();
  for (const auto& seq : batch) tokens.push_back(seq);
  return {{"tokens", tokens}};
}

std::vector<Matrix> parse_embed_response(const json& response,
                                         std::span<const std::vector<std::string>> batch,
                                         std::size_t dim) {
  if (!response.is_object() || !response.contains("vectors") || !response.contains("dim"))
    throw ShapeMismatch("response lacks \"vectors\" or \"dim\"");
  if (!response["dim"].is_number_integer() || response["dim"].get<std::size_t>() != dim)
    throw ShapeMismatch("response dim " + response["dim"].dump() + " != configured dim " +
                        std::to_string(dim));
  const json& vecs = response["vectors"];
  if (!vecs.is_array() || vecs.size() != batch.size())
    throw ShapeMismatch("response holds a different number of sequences than requested");
  std::vector<Matrix> out;
  out.reserve(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const json& seq = vecs[s];
    if (!seq.is_array() || seq.size() != batch[s].size())
      throw ShapeMismatch("sequence " + std::to_string(s) + " length mismatch");
    Matrix m(batch[s].size(), dim);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const json& v = seq[t];
      if (!v.is_array() || v.size() != dim)
        throw ShapeMismatch("vector width mismatch at sequence " + std::to_string(s));
      for (std::size_t c = 0; c < dim; ++c) {
        if (!v[c].is_number()) throw ShapeMismatch("non-numeric vector entry");
        m(t, c) = v[c].get<double>();
      }
    }
    if (!m.all_finite()) throw ShapeMismatch("non-finite vector entry");
    out.push_back(std::move(m));
  }
  return out;
}

struct RemoteEmbedder::Client {
  explicit Client(const std::string& endpoint) : cli(endpoint) {
    cli.set_connection_timeout(5);
    cli.set_read_timeout(30);
  }
  httplib::Client cli;
};

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config) : Embedder(std::move(config)) {
  config_.validate();
  client_ = std::make_unique<Client>(config_.endpoint);
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::vector<Matrix> RemoteEmbedder::post(std::span<const std::vector<std::string>> chunk) const {
  auto res = client_->cli.Post("/embed", make_embed_request(chunk).dump(), "application/json");
  if (!res)
    throw RemoteUnavailable("POST " + config_.endpoint + "/embed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw RemoteUnavailable("POST " + config_.endpoint + "/embed returned HTTP " +
                            std::to_string(res->status));
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw ShapeMismatch("response body is not JSON");
  return parse_embed_response(body, chunk, config_.dim);
}

static std::string cache_key(const std::vector<std::string>& seq) {
  std::string k;
  for (const auto& t : seq) {
    k += t;
    k += '\x1f';
  }
  return k;
}

std::vector<Matrix> RemoteEmbedder::embed_batch(std::span<const std::vector<std::string>> batch,
                                                const Matrix&) const {
  std::lock_guard lock(mu_);
  std::vector<Matrix> out(batch.size());
  std::vector<std::vector<std::string>> pending;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto it = cache_.find(cache_key(batch[i]));
    if (it != cache_.end()) {
      out[i] = it->second;
    } else {
      pending.push_back(batch[i]);
      where.push_back(i);
    }
  }
  for (std::size_t b = 0; b < pending.size(); b += config_.max_batch) {
    std::size_t e = std::min(pending.size(), b + config_.max_batch);
    auto got = post(std::span(pending).subspan(b, e - b));
    for (std::size_t k = b; k < e; ++k) {
      cache_[cache_key(pending[k])] = got[k - b];
      out[where[k]] = std::move(got[k - b]);
    }
  }
  return out;
}

Matrix RemoteEmbedder::embed(std::span<const std::string> tokens, const Matrix& table) const {
  if (tokens.empty()) throw EmptySequence("cannot embed an empty token list");
  std::vector<std::vector<std::string>> one{std::vector<std::string>(tokens.begin(), tokens.end())};
  return std::move(embed_batch(one, table)[0]);
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config) {
  switch (config.backend) {
    case Backend::kHashed: return std::make_shared<HashedEmbedder>(config);
    case Backend::kTable: return std::make_shared<TableEmbedder>(config);
    case Backend::kRemote: return std::make_shared<RemoteEmbedder>(config);
  }
  throw ConfigError("unknown backend");
}

Matrix embed_tokens(std::span<const std::string> tokens, const EmbedderConfig& config) {
  if (tokens.empty()) throw EmptySequence("cannot embed an empty token list");
  auto e = make_embedder(config);
  return e->embed(tokens, e->initial_table());
}

struct EmbedService::Impl {
  std::shared_ptr<const Embedder> embedder;
  Matrix table;
  httplib::Server server;
  std::thread thread;
};

EmbedService::EmbedService(std::shared_ptr<const Embedder> embedder, Matrix table)
    : impl_(std::make_unique<Impl>()) {
  impl_->embedder = std::move(embedder);
  impl_->table = std::move(table);
  Impl* impl = impl_.get();
  impl_->server.Post("/embed", [impl](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("tokens") || !body["tokens"].is_array()) {
      res.status = 400;
      res.set_content(R"({"error":"expected {\"tokens\": [[...]]}"})", "application/json");
      return;
    }
    try {
      auto batch = body["tokens"].get<std::vector<std::vector<std::string>>>();
      json vectors = json::array();
      for (const auto& seq : batch) {
        json rows = json::array();
        if (!seq.empty()) {
          Matrix m = impl->embedder->embed(seq, impl->table);
          for (std::size_t t = 0; t < m.rows; ++t)
            rows.push_back(std::vector<double>(m.row(t).begin(), m.row(t).end()));
        }
        vectors.push_back(std::move(rows));
      }
      json out = {{"vectors", vectors}, {"dim", impl->embedder->config().dim}};
      res.set_content(out.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

EmbedService::~EmbedService() { stop(); }

int EmbedService::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                        : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw RemoteUnavailable("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void EmbedService::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw RemoteUnavailable("cannot listen on " + host + ":" + std::to_string(port));
}

void EmbedService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace xbc::embed

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

#include "xbc/sequence_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "xbc/errors.hpp"
#include "xbc/hash.hpp"

namespace xbc::model {

using nlohmann::json;

std::string to_string(Decoder d) { return d == Decoder::kCrf ? "crf" : "softmax"; }

Decoder parse_decoder(std::string_view s) {
  if (s == "crf") return Decoder::kCrf;
  if (s == "softmax") return Decoder::kSoftmax;
  throw ConfigError("unknown decoder '" + std::string(s) + "'");
}

Params Params::zeros_like() const {
  Params z = *this;
  z.for_each([](const std::string&, Matrix& m) { m.fill(0.0); });
  return z;
}

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

Matrix emissions(const Matrix& hidden, const Matrix& w, const Matrix& b) {
  if (hidden.cols != w.rows || b.rows != 1 || b.cols != w.cols)
    throw ShapeMismatch("emission projection shapes do not line up");
  Matrix out(hidden.rows, w.cols);
  for (std::size_t t = 0; t < hidden.rows; ++t) {
    auto o = out.row(t);
    std::copy(b.data.begin(), b.data.end(), o.begin());
    for (std::size_t i = 0; i < hidden.cols; ++i) {
      const double h = hidden(t, i);
      for (std::size_t k = 0; k < w.cols; ++k) o[k] += h * w(i, k);
    }
  }
  return out;
}

static void init_uniform(Matrix& m, std::uint64_t seed, double range) {
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data[i] = -range + 2.0 * range * counter_uniform(seed, i);
}

SequenceModel SequenceModel::create(annotate::LabelSchema schema, embed::EmbedderConfig ec,
                                    ModelConfig config, std::uint64_t seed) {
  ec.validate();
  if (config.hidden_size == 0) throw ConfigError("hidden_size must be > 0");
  auto embedder = embed::make_embedder(ec);
  const std::size_t D = ec.dim, H = config.hidden_size, K = schema.size();
  Params p;
  p.embed_table = embedder->initial_table();
  p.gru = gru::GruParams(D, H);
  p.emit_w = Matrix(2 * H, K);
  p.emit_b = Matrix(1, K);
  p.crf = crf::CrfParams(K);
  const double gru_range = 1.0 / std::sqrt(static_cast<double>(H));
  const double emit_range = 1.0 / std::sqrt(static_cast<double>(2 * H));
  p.for_each([&](const std::string& name, Matrix& m) {
    if (name.rfind("gru.", 0) == 0) init_uniform(m, sub_seed(seed, name), gru_range);
    else if (name == "emit.w") init_uniform(m, sub_seed(seed, name), emit_range);
  });
  return SequenceModel(std::move(schema), std::move(ec), config, std::move(p), std::move(embedder));
}

SequenceModel::SequenceModel(annotate::LabelSchema schema, embed::EmbedderConfig embedder_config,
                             ModelConfig config, Params params,
                             std::shared_ptr<const embed::Embedder> embedder)
    : schema_(std::move(schema)),
      embedder_config_(std::move(embedder_config)),
      config_(config),
      params_(std::move(params)),
      embedder_(embedder ? std::move(embedder) : embed::make_embedder(embedder_config_)) {
  validate();
}

void SequenceModel::validate() const {
  const std::size_t D = embedder_config_.dim, H = config_.hidden_size, K = schema_.size();
  auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const std::string& name) {
    if (m.rows != r || m.cols != c)
      throw ShapeMismatch(name + " is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                          ", expected " + std::to_string(r) + "x" + std::to_string(c));
  };
  const std::size_t table_rows =
      embedder_config_.backend == embed::Backend::kHashed ? embedder_config_.vocab_buckets : 0;
  expect(params_.embed_table, table_rows, D, "embed.table");
  for (const auto* dir : {&params_.gru.fwd, &params_.gru.bwd}) {
    expect(dir->w_z, D, H, "gru.w_z");
    expect(dir->w_r, D, H, "gru.w_r");
    expect(dir->w_h, D, H, "gru.w_h");
    expect(dir->u_z, H, H, "gru.u_z");
    expect(dir->u_r, H, H, "gru.u_r");
    expect(dir->u_h, H, H, "gru.u_h");
    expect(dir->b_z, 1, H, "gru.b_z");
    expect(dir->b_r, 1, H, "gru.b_r");
    expect(dir->b_h, 1, H, "gru.b_h");
  }
  expect(params_.emit_w, 2 * H, K, "emit.w");
  expect(params_.emit_b, 1, K, "emit.b");
  if (params_.crf.num_labels != K) throw ShapeMismatch("CRF label count != schema size");
  params_.crf.validate();
  params_.for_each([](const std::string& name, const Matrix& m) {
    if (name != "crf.transitions" && !m.all_finite())
      throw ModelFormatError(name + " holds non-finite values");
  });
}

Matrix SequenceModel::embed(std::span<const std::string> tokens) const {
  return embedder_->embed(tokens, params_.embed_table);
}

Matrix SequenceModel::emissions_from(const Matrix& embedded) const {
  Matrix hidden = gru::bigru_forward(embedded, params_.gru);
  return model::emissions(hidden, params_.emit_w, params_.emit_b);
}

Matrix SequenceModel::emissions(std::span<const std::string> tokens) const {
  return emissions_from(embed(tokens));
}

std::vector<int> SequenceModel::decode_emissions(const Matrix& em) const {
  if (config_.decoder == Decoder::kSoftmax) return crf::softmax_decode(em);
  return crf::viterbi(em, params_.crf, schema_, config_.hard_bio_constraints).tags;
}

std::vector<int> SequenceModel::decode(std::span<const std::string> tokens) const {
  return decode_emissions(emissions(tokens));
}

static void check_labels(std::span<const int> gold, std::size_t k) {
  for (int g : gold)
    if (g < 0 || static_cast<std::size_t>(g) >= k)
      throw LabelOutOfRange("label id " + std::to_string(g) + " outside [0," + std::to_string(k) + ")");
}

double SequenceModel::loss_from(const Matrix& embedded, std::span<const int> gold) const {
  check_labels(gold, schema_.size());
  Matrix em = emissions_from(embedded);
  if (config_.decoder == Decoder::kSoftmax) return crf::softmax_nll_with_grad(em, gold).nll;
  return crf::nll(em, params_.crf, gold);
}

double SequenceModel::loss(std::span<const std::string> tokens, std::span<const int> gold) const {
  return loss_from(embed(tokens), gold);
}

SequenceGrad SequenceModel::loss_and_grad(std::span<const std::string> tokens,
                                          std::span<const int> gold, const Matrix* embedded) const {
  check_labels(gold, schema_.size());
  if (gold.size() != tokens.size()) throw LengthMismatch("labels and tokens differ in length");
  Matrix local;
  if (!embedded) {
    local = embed(tokens);
    embedded = &local;
  }
  gru::BiGruCache cache;
  Matrix hidden = gru::bigru_forward(*embedded, params_.gru, &cache);
  Matrix em = model::emissions(hidden, params_.emit_w, params_.emit_b);
  crf::NllGrad g = config_.decoder == Decoder::kSoftmax ? crf::softmax_nll_with_grad(em, gold)
                                                        : crf::nll_with_grad(em, params_.crf, gold);

  SequenceGrad out;
  out.loss = g.nll;
  Params shell = params_;
  shell.embed_table = Matrix(0, embedder_config_.dim);
  out.grad = shell.zeros_like();
  if (config_.decoder == Decoder::kCrf) out.grad.crf.transitions = std::move(g.d_transitions);

  const std::size_t T = em.rows, K = em.cols, H2 = hidden.cols;
  Matrix d_hidden(T, H2);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      const double d = g.d_emissions(t, k);
      out.grad.emit_b.data[k] += d;
      for (std::size_t i = 0; i < H2; ++i) {
        out.grad.emit_w(i, k) += hidden(t, i) * d;
        d_hidden(t, i) += params_.emit_w(i, k) * d;
      }
    }
  }
  Matrix d_in = gru::bigru_backward(*embedded, params_.gru, cache, d_hidden, out.grad.gru);
  out.embed_rows = embedder_->rows(tokens);
  if (!out.embed_rows.empty()) out.d_embed = std::move(d_in);
  return out;
}

std::uint64_t SequenceModel::hash() const {
  std::uint64_t h = kFnvOffsetBasis;
  params_.for_each([&](const std::string& name, const Matrix& m) {
    h = fnv1a64(name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(m.data.data()),
                                 m.data.size() * sizeof(double)),
                h);
  });
  return h;
}

void save_model(const std::filesystem::path& path, const SequenceModel& model) {
  json tensors = json::array();
  model.params().for_each([&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"shape", {m.rows, m.cols}}, {"data", m.data}});
  });
  json j = {{"format", "xbc-sequence-model"},
            {"format_version", kModelFormatVersion},
            {"schema", {{"entity_types", model.schema().entity_types()}}},
            {"embedder", embed::to_json(model.embedder_config())},
            {"model",
             {{"hidden_size", model.config().hidden_size},
              {"decoder", to_string(model.config().decoder)},
              {"hard_bio_constraints", model.config().hard_bio_constraints}}},
            {"tensors", tensors}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ModelFormatError("cannot write model to " + path.string());
  out << j.dump() << '\n';
}

SequenceModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelFormatError("cannot read model " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ModelFormatError("model file is not JSON: " + path.string());
  try {
    if (j.at("format").get<std::string>() != "xbc-sequence-model")
      throw ModelFormatError("not a sequence model file");
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw ModelFormatError("unsupported format_version " + j["format_version"].dump());
    annotate::LabelSchema schema(j.at("schema").at("entity_types").get<std::vector<std::string>>());
    embed::EmbedderConfig ec = embed::embedder_config_from_json(j.at("embedder"));
    ModelConfig mc;
    mc.hidden_size = j.at("model").at("hidden_size").get<std::size_t>();
    mc.decoder = parse_decoder(j.at("model").at("decoder").get<std::string>());
    mc.hard_bio_constraints = j.at("model").at("hard_bio_constraints").get<bool>();

    std::map<std::string, const json*> by_name;
    for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    Params p;
    p.crf.num_labels = schema.size();
    std::size_t seen = 0;
    p.for_each([&](const std::string& name, Matrix& m) {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ModelFormatError("missing tensor " + name);
      const json& t = *it->second;
      auto shape = t.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw ModelFormatError(name + ": shape header must have 2 dims");
      m = Matrix(shape[0], shape[1]);
      const json& data = t.at("data");
      if (data.size() != m.size())
        throw ModelFormatError(name + ": data length does not match shape header");
      for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = data[i].get<double>();
      ++seen;
    });
    if (seen != by_name.size()) throw ModelFormatError("model file holds unknown tensors");
    return SequenceModel(std::move(schema), std::move(ec), mc, std::move(p));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(path.string() + ": " + e.what());
  }
}

}  // namespace xbc::model

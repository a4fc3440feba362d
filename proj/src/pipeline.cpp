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

#include "xbc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "xbc/baseline.hpp"
#include "xbc/events.hpp"
#include "xbc/hash.hpp"
#include "xbc/langid.hpp"
#include "xbc/preprocess.hpp"

namespace xbc::pipeline {

using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

// Walks one JSON object, remembering which keys were consumed so that
// leftovers (typos) can be reported with their full path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }

  const json& at(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + " has the wrong type");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + field(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::uint64_t get_seed(const json& v, const std::string& field) {
  if (v.is_string()) return std::stoull(v.get<std::string>());
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
  throw ConfigError(field + " must be an integer or decimal string");
}

ingest::SourceConfig parse_source(const json& j, const std::string& path, const fs::path& base) {
  Section s(j, path);
  ingest::SourceConfig c;
  c.source_id = s.get<std::string>("source_id", "");
  std::string kind = s.get<std::string>("kind", "file");
  if (kind == "file") c.kind = ingest::SourceKind::kFile;
  else if (kind == "http") c.kind = ingest::SourceKind::kHttp;
  else if (kind == "export_dump") c.kind = ingest::SourceKind::kExportDump;
  else throw ConfigError(s.field("kind") + ": unknown source kind '" + kind + "'");
  std::string loc = s.get<std::string>("location", "");
  c.location = c.kind == ingest::SourceKind::kHttp || loc.empty() ? loc : resolve(base, loc).string();
  std::string fmt = s.get<std::string>("format_hint", "json_lines");
  if (fmt == "json_lines") c.format_hint = ingest::FormatHint::kJsonLines;
  else if (fmt == "plain_text") c.format_hint = ingest::FormatHint::kPlainText;
  else throw ConfigError(s.field("format_hint") + ": unknown format '" + fmt + "'");
  c.poll_interval = s.get<std::int64_t>("poll_interval", 0);
  s.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

void require_exists(const fs::path& p, const std::string& field) {
  if (!fs::exists(p)) throw ConfigError(field + ": path does not exist: " + p.string());
}

}  // namespace

void apply_seed(PipelineConfig& config, std::uint64_t seed) {
  config.seed = seed;
  if (!config.raw.contains("embedder") || !config.raw["embedder"].contains("seed"))
    config.embedder.seed = sub_seed(seed, "embed");
  if (!config.raw.contains("train") || !config.raw["train"].contains("seed"))
    config.train.seed = sub_seed(seed, "train");
}

PipelineConfig parse_config(const json& j, const fs::path& base, bool require_all) {
  PipelineConfig c;
  c.raw = j;
  Section top(j, "");

  if (top.has("sources")) {
    const json& arr = top.at("sources");
    if (!arr.is_array()) throw ConfigError("sources must be an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto src = parse_source(arr[i], "sources[" + std::to_string(i) + "]", base);
      if (!ids.insert(src.source_id).second)
        throw ConfigError("sources[" + std::to_string(i) + "]: duplicate source_id '" + src.source_id + "'");
      c.sources.push_back(std::move(src));
    }
  }
  if (top.has("fetched_at")) c.fetched_at = ingest::parse_rfc3339(top.get<std::string>("fetched_at", ""));

  if (top.has("langid")) {
    Section s(top.at("langid"), "langid");
    if (s.has("profiles")) c.langid.profiles = resolve(base, s.get<std::string>("profiles", ""));
    c.langid.min_chars = s.get<int>("min_chars", 10);
    c.langid.default_lang = s.get<std::string>("default_lang", "en");
    s.finish();
    if (c.langid.min_chars < 0) throw ConfigError("langid.min_chars must be >= 0");
  }
  if (top.has("resources_dir")) c.resources_dir = resolve(base, top.get<std::string>("resources_dir", ""));
  if (top.has("schema")) c.schema = resolve(base, top.get<std::string>("schema", ""));
  if (top.has("gazetteer")) c.gazetteer = resolve(base, top.get<std::string>("gazetteer", ""));
  if (top.has("gold")) c.gold = resolve(base, top.get<std::string>("gold", ""));
  if (top.has("workdir")) c.workdir = resolve(base, top.get<std::string>("workdir", ""));
  else c.workdir = (base / "work").lexically_normal();
  std::uint64_t seed = top.has("seed") ? get_seed(top.at("seed"), "seed") : 0;

  if (top.has("embedder")) {
    Section s(top.at("embedder"), "embedder");
    auto& e = c.embedder;
    e.backend = embed::parse_backend(s.get<std::string>("backend", "hashed"));
    e.dim = s.get<std::size_t>("dim", 32);
    e.vocab_buckets = s.get<std::size_t>("vocab_buckets", 4096);
    if (s.has("seed")) e.seed = get_seed(s.at("seed"), "embedder.seed");
    e.text_channel = embed::parse_channel(s.get<std::string>("text_channel", "normalized"));
    e.endpoint = s.get<std::string>("endpoint", "");
    if (s.has("vectors")) e.vectors_path = resolve(base, s.get<std::string>("vectors", "")).string();
    e.max_batch = s.get<std::size_t>("max_batch", 32);
    s.finish();
  }
  if (top.has("train")) {
    Section s(top.at("train"), "train");
    auto& t = c.train;
    t.learning_rate = s.get<double>("learning_rate", 1e-2);
    t.epochs = s.get<std::size_t>("epochs", 60);
    t.batch_size = s.get<std::size_t>("batch_size", 8);
    if (s.has("seed")) t.seed = get_seed(s.at("seed"), "train.seed");
    t.optimizer = model::parse_optimizer(s.get<std::string>("optimizer", "adam"));
    t.beta1 = s.get<double>("beta1", 0.9);
    t.beta2 = s.get<double>("beta2", 0.999);
    t.epsilon = s.get<double>("epsilon", 1e-8);
    t.grad_clip_norm = s.get<double>("grad_clip_norm", 5.0);
    t.early_stop_patience = s.get<std::size_t>("early_stop_patience", 10);
    for (const auto& m : s.get<std::vector<std::string>>("augment", {}))
      t.augment.insert(augment::parse_mode(m));
    t.augment_copies = s.get<std::size_t>("augment_copies", 1);
    t.hard_bio_constraints = s.get<bool>("hard_bio_constraints", true);
    t.hidden_size = s.get<std::size_t>("hidden_size", 32);
    t.decoder = model::parse_decoder(s.get<std::string>("decoder", "crf"));
    t.max_seq_len = s.get<std::size_t>("max_seq_len", 256);
    c.dev_split = s.get<double>("dev_split", 0.2);
    s.finish();
    if (!(t.learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
    if (!(c.dev_split >= 0.0 && c.dev_split < 1.0)) throw ConfigError("train.dev_split must be in [0, 1)");
  }
  top.finish();

  apply_seed(c, seed);
  try {
    c.embedder.validate();
    c.train.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  if (require_all) {
    if (c.sources.empty()) throw ConfigError("sources: at least one source is required");
    if (c.langid.profiles.empty()) throw ConfigError("langid.profiles is required");
    if (c.resources_dir.empty()) throw ConfigError("resources_dir is required");
    if (c.schema.empty()) throw ConfigError("schema is required");
    if (c.gazetteer.empty()) throw ConfigError("gazetteer is required");
    // Source locations are not checked here: an unreachable feed is an
    // ingest failure (exit class 10), not a config error.
  }
  if (!c.langid.profiles.empty()) require_exists(c.langid.profiles, "langid.profiles");
  if (!c.resources_dir.empty()) require_exists(c.resources_dir, "resources_dir");
  if (!c.schema.empty()) require_exists(c.schema, "schema");
  if (!c.gazetteer.empty()) require_exists(c.gazetteer, "gazetteer");
  if (c.gold) require_exists(*c.gold, "gold");
  if (!c.embedder.vectors_path.empty()) require_exists(c.embedder.vectors_path, "embedder.vectors");
  return c;
}

PipelineConfig validate_config(const fs::path& path, bool require_all) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
  return parse_config(j, fs::absolute(path).parent_path(), require_all);
}

// ---------------------------------------------------------------- stages

static void write_json(const fs::path& p, const json& j, int indent = 1) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorClass::kGeneric, "cannot write " + p.string());
  out << j.dump(indent) << '\n';
}

static json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorClass::kGeneric, "cannot read " + p.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorClass::kGeneric, p.string() + " is not valid JSON");
  return j;
}

std::vector<ingest::IngestReport> run_ingest(const std::vector<ingest::SourceConfig>& sources,
                                             const fs::path& corpus, ingest::Timestamp now, bool fresh) {
  if (fresh) fs::remove(corpus);
  ingest::CorpusStore store(corpus);
  std::vector<ingest::IngestReport> reports;
  for (const auto& s : sources) reports.push_back(ingest::ingest_source(s, store, now));
  return reports;
}

void run_detect_lang(const fs::path& profiles_path, const fs::path& corpus_path,
                     const fs::path& out_manifest, int min_chars, const std::string& default_lang) {
  auto profiles = langid::load_profiles(profiles_path);
  auto corpus = ingest::load_corpus(corpus_path);
  auto verdicts = langid::detect_all(corpus, profiles, min_chars, Exec::kParallel);
  json buckets = json::object();
  json records = json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& v = verdicts[i];
    const bool und = v.lang == langid::kUndetermined;
    buckets[v.lang].push_back(std::to_string(corpus[i].record_id));
    records.push_back({{"record_id", std::to_string(corpus[i].record_id)},
                       {"lang", v.lang},
                       {"confidence", v.confidence},
                       {"routed_lang", und ? default_lang : v.lang},
                       {"undetermined", und}});
  }
  write_json(out_manifest, {{"default_lang", default_lang}, {"buckets", buckets}, {"records", records}});
}

void run_preprocess(const fs::path& corpus_path, const fs::path& lang_manifest,
                    const fs::path& resources_dir, const fs::path& out_dir) {
  auto corpus = ingest::load_corpus(corpus_path);
  json manifest = read_json(lang_manifest);
  std::map<std::uint64_t, std::string> routed;
  for (const auto& r : manifest.at("records"))
    routed[std::stoull(r.at("record_id").get<std::string>())] = r.at("routed_lang").get<std::string>();
  auto resources = preprocess::load_resources(resources_dir);
  if (manifest.contains("default_lang")) resources.set_default(manifest["default_lang"].get<std::string>());
  std::vector<std::string> langs;
  for (const auto& rec : corpus) {
    auto it = routed.find(rec.record_id);
    if (it == routed.end())
      throw MissingResources("record " + std::to_string(rec.record_id) + " has no language verdict");
    langs.push_back(it->second);
  }
  auto docs = preprocess::preprocess_corpus(corpus, langs, resources, Exec::kParallel);
  preprocess::write_docs(out_dir, docs);
}

void run_annotate(const fs::path& docs_path, const fs::path& gazetteer_path,
                  const std::optional<fs::path>& gold_path, const fs::path& schema_path,
                  const fs::path& out_labels) {
  auto docs = preprocess::read_docs(docs_path);
  auto schema = annotate::load_schema(schema_path);
  auto gazetteer = annotate::load_gazetteer(gazetteer_path);
  std::map<std::uint64_t, std::vector<annotate::Span>> gold;
  if (gold_path) {
    for (const auto& r : annotate::read_labels(*gold_path, schema))
      gold[r.record_id] = annotate::spans_of(r.labels, schema, annotate::SpanSource::kGold);
  }
  std::vector<annotate::LabelRecord> out(docs.size());
  const long n = static_cast<long>(docs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    auto it = gold.find(docs[i].record_id);
    std::span<const annotate::Span> g;
    if (it != gold.end()) g = it->second;
    out[i] = {docs[i].record_id, docs[i].lang, annotate::annotate_doc(docs[i], gazetteer, schema, g)};
  }
  annotate::write_labels(out_labels, out, schema);
}

std::vector<annotate::TaggedSequence> join_labels(const std::vector<preprocess::PreprocessedDoc>& docs,
                                                  const std::vector<annotate::LabelRecord>& labels,
                                                  embed::TextChannel channel) {
  std::map<std::uint64_t, const preprocess::PreprocessedDoc*> by_id;
  for (const auto& d : docs) by_id[d.record_id] = &d;
  std::vector<annotate::TaggedSequence> out;
  for (const auto& r : labels) {
    auto it = by_id.find(r.record_id);
    if (it == by_id.end())
      throw AlignmentError("label record " + std::to_string(r.record_id) + " has no document");
    const auto& doc = *it->second;
    if (doc.tokens.size() != r.labels.size())
      throw AlignmentError("record " + std::to_string(r.record_id) + ": label count != token count");
    out.push_back({r.record_id, doc.lang, embed::channel_texts(doc, channel), r.labels});
  }
  return out;
}

static fs::path sibling(const fs::path& model, const std::string& suffix) {
  return model.parent_path() / (model.stem().string() + suffix);
}

TrainOutcome run_train(const fs::path& labels_path, const fs::path& docs_path, double dev_split,
                       const PipelineConfig& config, const fs::path& out_model) {
  if (config.schema.empty()) throw ConfigError("train needs a schema path in the config");
  auto schema = annotate::load_schema(config.schema);
  auto docs = preprocess::read_docs(docs_path);
  auto labels = annotate::read_labels(labels_path, schema);
  auto data = join_labels(docs, labels, config.embedder.text_channel);

  std::vector<std::uint64_t> ids;
  for (const auto& s : data) ids.push_back(s.record_id);
  TrainOutcome out{.result = {model::SequenceModel::create(schema, config.embedder,
                                                           config.train.model_config(), 0),
                              {}, 0, 0},
                   .dev_ids = model::choose_dev_ids(ids, dev_split, config.train.seed)};
  std::vector<annotate::TaggedSequence> train_set, dev_set;
  for (auto& s : data) (out.dev_ids.count(s.record_id) ? dev_set : train_set).push_back(std::move(s));

  std::optional<preprocess::ResourceSet> resources;
  if (!config.train.augment.empty()) {
    if (config.resources_dir.empty()) throw ConfigError("augmentation needs resources_dir");
    resources = preprocess::load_resources(config.resources_dir);
  }
  out.result = model::train(train_set, dev_set, config.train, schema, config.embedder,
                            resources ? &*resources : nullptr);
  model::save_model(out_model, out.result.model);
  model::write_history(sibling(out_model, ".history.jsonl"), out.result.history);
  json dev = json::array();
  for (auto id : out.dev_ids) dev.push_back(std::to_string(id));
  write_json(sibling(out_model, ".dev_ids.json"), dev, -1);
  return out;
}

void run_extract(const fs::path& model_path, const fs::path& docs_path, const fs::path& out_events,
                 const std::optional<fs::path>& out_pred_labels) {
  auto model = model::load_model(model_path);
  auto docs = preprocess::read_docs(docs_path);
  std::vector<std::vector<int>> labels(docs.size());
  const long n = static_cast<long>(docs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    if (docs[i].tokens.empty()) continue;
    labels[i] = model.decode(embed::channel_texts(docs[i], model.embedder_config().text_channel));
  }
  if (out_events.has_parent_path()) fs::create_directories(out_events.parent_path());
  std::ofstream ev(out_events);
  if (!ev) throw Error(ErrorClass::kModel, "cannot write " + out_events.string());
  std::vector<annotate::LabelRecord> preds;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& e : events::assemble_events(docs[i], labels[i], model.schema()))
      ev << events::to_json(e).dump() << '\n';
    preds.push_back({docs[i].record_id, docs[i].lang, labels[i]});
  }
  if (out_pred_labels) annotate::write_labels(*out_pred_labels, preds, model.schema());
}

eval::EvalReport run_eval(const fs::path& gold_path, const fs::path& pred_path, const fs::path& schema_path,
                          const std::optional<fs::path>& ids_path, const fs::path& out_report) {
  auto schema = annotate::load_schema(schema_path);
  auto gold = annotate::read_labels(gold_path, schema);
  auto pred = annotate::read_labels(pred_path, schema);
  if (ids_path) {
    std::set<std::uint64_t> keep;
    for (const auto& id : read_json(*ids_path)) keep.insert(std::stoull(id.get<std::string>()));
    auto filter = [&](auto& v) { std::erase_if(v, [&](const auto& r) { return !keep.count(r.record_id); }); };
    filter(gold);
    filter(pred);
  }
  std::map<std::uint64_t, const annotate::LabelRecord*> by_id;
  for (const auto& p : pred) by_id[p.record_id] = &p;
  if (by_id.size() != gold.size())
    throw AlignmentError(std::to_string(gold.size()) + " gold records vs " + std::to_string(by_id.size()) +
                         " predicted");
  std::vector<annotate::TaggedSequence> g, p;
  for (const auto& r : gold) {
    auto it = by_id.find(r.record_id);
    if (it == by_id.end()) throw AlignmentError("no prediction for record " + std::to_string(r.record_id));
    g.push_back({r.record_id, r.lang, {}, r.labels});
    p.push_back({r.record_id, r.lang, {}, it->second->labels});
  }
  auto report = eval::span_prf(g, p, schema);
  write_json(out_report, eval::to_json(report));
  return report;
}

eval::AccuracyMatrix run_report(const fs::path& runs) {
  if (!fs::is_directory(runs)) throw Error(ErrorClass::kEval, "runs directory not found: " + runs.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, eval::MetricRow> rows;
  for (const auto& f : files) {
    json j = read_json(f);
    try {
      auto row = eval::metric_row(eval::report_from_json(j));
      if (!j.contains("token_accuracy")) row["accuracy"] = std::nullopt;
      rows[j.value("variant", f.stem().string())] = row;
    } catch (const json::exception& e) {
      throw Error(ErrorClass::kEval, f.string() + ": not an evaluation report (" + e.what() + ")");
    }
  }
  if (rows.empty()) throw Error(ErrorClass::kEval, "no reports under " + runs.string());
  return eval::accuracy_matrix(rows);
}

// ---------------------------------------------------------------- run

int exit_code_for(ErrorClass c) {
  switch (c) {
    case ErrorClass::kGeneric: return 1;
    case ErrorClass::kConfig: return 2;
    case ErrorClass::kIngest: return 10;
    case ErrorClass::kLangid: return 11;
    case ErrorClass::kPreprocess: return 12;
    case ErrorClass::kAnnotate: return 13;
    case ErrorClass::kEmbed: return 14;
    case ErrorClass::kModel: return 15;
    case ErrorClass::kEval: return 16;
  }
  return 1;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "missing";
  std::uint64_t h = kFnvOffsetBasis;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return hex64(h);
}

static std::string tree_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto& f : files) {
    h = fnv1a64(fs::relative(f, dir).generic_string(), h);
    h = fnv1a64(file_hash(f), h);
  }
  return hex64(h);
}

static std::string value_hash(const json& j) { return hex64(fnv1a64(j.dump())); }

static ErrorClass stage_class(const std::string& stage) {
  if (stage == "ingest") return ErrorClass::kIngest;
  if (stage == "detect-lang") return ErrorClass::kLangid;
  if (stage == "preprocess") return ErrorClass::kPreprocess;
  if (stage == "annotate") return ErrorClass::kAnnotate;
  if (stage == "train" || stage == "extract") return ErrorClass::kModel;
  return ErrorClass::kEval;
}

static json train_json(const PipelineConfig& c) {
  const auto& t = c.train;
  std::vector<std::string> aug;
  for (auto m : t.augment) aug.push_back(augment::to_string(m));
  return {{"embedder", embed::to_json(c.embedder)},
          {"learning_rate", t.learning_rate}, {"epochs", t.epochs},
          {"batch_size", t.batch_size},       {"seed", std::to_string(t.seed)},
          {"optimizer", model::to_string(t.optimizer)},
          {"beta1", t.beta1}, {"beta2", t.beta2}, {"epsilon", t.epsilon},
          {"grad_clip_norm", t.grad_clip_norm}, {"early_stop_patience", t.early_stop_patience},
          {"augment", aug}, {"augment_copies", t.augment_copies},
          {"hard_bio_constraints", t.hard_bio_constraints}, {"hidden_size", t.hidden_size},
          {"decoder", model::to_string(t.decoder)}, {"max_seq_len", t.max_seq_len},
          {"dev_split", c.dev_split}};
}

namespace {

struct StageSpec {
  std::string name;
  std::vector<std::string> inputs;  // hashes
  std::vector<fs::path> outputs;
  std::function<void()> execute;
};

}  // namespace

RunResult run_pipeline(const PipelineConfig& config) {
  const fs::path wd = config.workdir;
  fs::create_directories(wd);
  const fs::path corpus = wd / "ingest" / "corpus.jsonl";
  const fs::path ingest_report = wd / "ingest" / "report.json";
  const fs::path lang_manifest = wd / "detect-lang" / "manifest.json";
  const fs::path docs_dir = wd / "preprocess";
  const fs::path labels = wd / "annotate" / "labels.jsonl";
  const fs::path model_path = wd / "train" / "model.json";
  const fs::path dev_ids = wd / "train" / "model.dev_ids.json";
  const fs::path events_path = wd / "extract" / "events.jsonl";
  const fs::path pred_labels = wd / "extract" / "pred_labels.jsonl";
  const fs::path report_path = wd / "eval" / "report.json";
  const fs::path matrix_path = wd / "eval" / "matrix.json";
  const fs::path manifest_path = wd / "manifest.json";
  const fs::path timings_path = wd / "timings.json";

  std::map<std::string, ManifestEntry> previous;
  if (fs::exists(manifest_path)) {
    json prev = json::parse(std::ifstream(manifest_path), nullptr, false);
    if (prev.is_array()) {
      for (const auto& e : prev) {
        ManifestEntry m{e.value("stage", ""), e.value("inputs", std::vector<std::string>{}),
                        e.value("outputs", std::vector<std::string>{})};
        previous[m.stage] = m;
      }
    }
  }
  std::map<std::string, double> timings;
  if (fs::exists(timings_path)) {
    json t = json::parse(std::ifstream(timings_path), nullptr, false);
    if (t.is_object())
      for (auto& [k, v] : t.items()) timings[k] = v.get<double>();
  }

  RunResult result;
  auto run_stage = [&](StageSpec spec) {
    auto hashes = [&] {
      std::vector<std::string> h;
      for (const auto& o : spec.outputs) h.push_back(file_hash(o));
      return h;
    };
    auto it = previous.find(spec.name);
    if (it != previous.end() && it->second.inputs == spec.inputs && it->second.outputs == hashes() &&
        std::find(it->second.outputs.begin(), it->second.outputs.end(), "missing") == it->second.outputs.end()) {
      result.manifest.push_back(it->second);
      result.skipped.push_back(spec.name);
      return;
    }
    auto t0 = std::chrono::steady_clock::now();
    spec.execute();
    timings[spec.name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.manifest.push_back({spec.name, spec.inputs, hashes()});
    result.executed.push_back(spec.name);
  };

  auto write_manifest = [&] {
    json arr = json::array();
    for (const auto& m : result.manifest)
      arr.push_back({{"stage", m.stage}, {"inputs", m.inputs}, {"outputs", m.outputs}});
    write_json(manifest_path, arr, 2);
    write_json(timings_path, timings, 2);
  };

  const auto now = config.fetched_at.value_or(
      std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
  std::string current;
  try {
    // ingest
    current = "ingest";
    {
      json src = json::array();
      std::vector<std::string> in;
      for (const auto& s : config.sources) {
        src.push_back({{"id", s.source_id}, {"kind", static_cast<int>(s.kind)}, {"location", s.location},
                       {"format", static_cast<int>(s.format_hint)}});
        in.push_back(s.kind == ingest::SourceKind::kHttp ? value_hash(s.location) : file_hash(s.location));
      }
      in.push_back(value_hash({{"sources", src}, {"fetched_at", ingest::format_rfc3339(now)}}));
      run_stage({"ingest", in, {corpus, ingest_report}, [&] {
                   auto reports = run_ingest(config.sources, corpus, now, /*fresh=*/true);
                   json arr = json::array();
                   for (const auto& r : reports)
                     arr.push_back({{"source_id", r.source_id}, {"records_read", r.records_read},
                                    {"records_kept", r.records_kept},
                                    {"duplicates_dropped", r.duplicates_dropped},
                                    {"malformed_dropped", r.malformed_dropped}});
                   write_json(ingest_report, arr);
                 }});
    }
    current = "detect-lang";
    run_stage({"detect-lang",
               {file_hash(corpus), file_hash(config.langid.profiles),
                value_hash({{"min_chars", config.langid.min_chars}, {"default_lang", config.langid.default_lang}})},
               {lang_manifest},
               [&] {
                 run_detect_lang(config.langid.profiles, corpus, lang_manifest, config.langid.min_chars,
                                 config.langid.default_lang);
               }});
    current = "preprocess";
    run_stage({"preprocess",
               {file_hash(corpus), file_hash(lang_manifest), tree_hash(config.resources_dir)},
               {docs_dir / "docs.jsonl", docs_dir / "tokens.tsv"},
               [&] { run_preprocess(corpus, lang_manifest, config.resources_dir, docs_dir); }});
    current = "annotate";
    run_stage({"annotate",
               {file_hash(docs_dir / "docs.jsonl"), file_hash(config.gazetteer), file_hash(config.schema),
                config.gold ? file_hash(*config.gold) : "none"},
               {labels},
               [&] { run_annotate(docs_dir, config.gazetteer, config.gold, config.schema, labels); }});
    current = "train";
    {
      std::vector<std::string> in = {file_hash(labels), file_hash(docs_dir / "docs.jsonl"),
                                     file_hash(config.schema), value_hash(train_json(config))};
      if (!config.train.augment.empty()) in.push_back(tree_hash(config.resources_dir));
      run_stage({"train", in, {model_path, dev_ids},
                 [&] { run_train(labels, docs_dir, config.dev_split, config, model_path); }});
    }
    current = "extract";
    run_stage({"extract", {file_hash(model_path), file_hash(docs_dir / "docs.jsonl")}, {events_path, pred_labels},
               [&] { run_extract(model_path, docs_dir, events_path, pred_labels); }});
    current = "eval";
    run_stage({"eval",
               {file_hash(labels), file_hash(pred_labels), file_hash(dev_ids), file_hash(config.schema)},
               {report_path, matrix_path},
               [&] {
                 auto report = run_eval(labels, pred_labels, config.schema, dev_ids, report_path);
                 auto matrix = eval::accuracy_matrix(std::map<std::string, eval::EvalReport>{
                     {"bigru-crf", report}});
                 write_json(matrix_path, matrix.to_json());
                 std::cout << matrix.render_text();
               }});
  } catch (const Error& e) {
    result.error = current + ": " + e.what();
    result.exit_code = e.error_class() == ErrorClass::kConfig ? exit_code_for(ErrorClass::kConfig)
                                                              : exit_code_for(stage_class(current));
  } catch (const std::exception& e) {
    result.error = current + ": " + e.what();
    result.exit_code = exit_code_for(stage_class(current));
  }
  write_manifest();
  return result;
}

}  // namespace xbc::pipeline

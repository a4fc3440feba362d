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

// xbc: command-line front end. One subcommand per pipeline stage plus `run`,
// which executes all of them from a single config file.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "xbc/embed.hpp"
#include "xbc/errors.hpp"
#include "xbc/langid.hpp"
#include "xbc/pipeline.hpp"
#include "xbc/sequence_model.hpp"

namespace fs = std::filesystem;
using namespace xbc;

namespace {

struct Globals {
  std::string config;
  std::string workdir;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

pipeline::PipelineConfig load_config(const Globals& g, bool require_all) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  auto c = pipeline::validate_config(g.config, require_all);
  if (!g.workdir.empty()) c.workdir = g.workdir;
  if (g.seed) pipeline::apply_seed(c, *g.seed);
  return c;
}

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "xbc: " << msg << '\n';
}

ingest::Timestamp now_or(const pipeline::PipelineConfig& c) {
  return c.fetched_at.value_or(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

embed::EmbedService* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xbc - multilingual CTI extraction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::string seed_text;
  app.add_option("--config", g.config, "pipeline config (JSON)");
  app.add_option("--workdir", g.workdir, "override the config workdir");
  app.add_option("--seed", seed_text, "override the global seed");
  app.add_flag("-v,--verbose", g.verbose, "progress on stderr");

  std::function<void()> action;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "pull configured sources into a corpus");
  std::string ingest_out;
  bool ingest_fresh = false;
  ingest_cmd->add_option("--out", ingest_out, "corpus JSON-lines file")->required();
  ingest_cmd->add_flag("--fresh", ingest_fresh, "start from an empty corpus");
  ingest_cmd->callback([&] {
    action = [&] {
      auto c = load_config(g, false);
      if (c.sources.empty()) throw ConfigError("sources: at least one source is required");
      auto reports = pipeline::run_ingest(c.sources, ingest_out, now_or(c), ingest_fresh);
      for (const auto& r : reports)
        std::cout << r.source_id << ": read " << r.records_read << ", kept " << r.records_kept
                  << ", duplicates " << r.duplicates_dropped << ", malformed " << r.malformed_dropped << '\n';
    };
  });

  // detect-lang
  auto* lang_cmd = app.add_subcommand("detect-lang", "tag each corpus record with a language");
  std::string profiles, lang_corpus, lang_out, default_lang = "en";
  int min_chars = 10;
  lang_cmd->add_option("--profiles", profiles)->required()->check(CLI::ExistingFile);
  lang_cmd->add_option("--corpus", lang_corpus)->required();
  lang_cmd->add_option("--out", lang_out)->required();
  lang_cmd->add_option("--min-chars", min_chars)->capture_default_str();
  lang_cmd->add_option("--default-lang", default_lang, "where undetermined records are routed")
      ->capture_default_str();
  lang_cmd->callback([&] {
    action = [&] { pipeline::run_detect_lang(profiles, lang_corpus, lang_out, min_chars, default_lang); };
  });

  // train-lang
  auto* tl_cmd = app.add_subcommand("train-lang", "build n-gram language profiles from text files");
  std::vector<std::string> tl_inputs;
  std::string tl_out;
  int tl_order = 3;
  tl_cmd->add_option("--lang", tl_inputs, "LANG=FILE, one sentence per line")->required();
  tl_cmd->add_option("--n-max", tl_order)->capture_default_str()->check(CLI::Range(1, 5));
  tl_cmd->add_option("--out", tl_out)->required();
  tl_cmd->callback([&] {
    action = [&] {
      std::map<std::string, std::vector<std::string>> samples;
      for (const auto& spec : tl_inputs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("--lang expects LANG=FILE, got '" + spec + "'");
        std::ifstream in(spec.substr(eq + 1));
        if (!in) throw ConfigError("cannot read " + spec.substr(eq + 1));
        auto& v = samples[spec.substr(0, eq)];
        for (std::string line; std::getline(in, line);)
          if (!line.empty()) v.push_back(line);
      }
      auto built = langid::train_profiles(samples, tl_order);
      langid::save_profiles(tl_out, built);
    };
  });

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "normalize, tokenize, lemmatize and stem");
  std::string pre_corpus, pre_manifest, pre_resources, pre_out;
  pre_cmd->add_option("--corpus", pre_corpus)->required();
  pre_cmd->add_option("--lang-manifest", pre_manifest)->required();
  pre_cmd->add_option("--resources", pre_resources)->required()->check(CLI::ExistingDirectory);
  pre_cmd->add_option("--out", pre_out, "output directory")->required();
  pre_cmd->callback([&] {
    action = [&] { pipeline::run_preprocess(pre_corpus, pre_manifest, pre_resources, pre_out); };
  });

  // annotate
  auto* ann_cmd = app.add_subcommand("annotate", "silver BIO labels from patterns and a gazetteer");
  std::string ann_docs, ann_gaz, ann_gold, ann_schema, ann_out;
  ann_cmd->add_option("--docs", ann_docs)->required();
  ann_cmd->add_option("--gazetteer", ann_gaz)->required()->check(CLI::ExistingFile);
  ann_cmd->add_option("--gold", ann_gold);
  ann_cmd->add_option("--schema", ann_schema)->required()->check(CLI::ExistingFile);
  ann_cmd->add_option("--out", ann_out)->required();
  ann_cmd->callback([&] {
    action = [&] {
      std::optional<fs::path> gold;
      if (!ann_gold.empty()) gold = ann_gold;
      pipeline::run_annotate(ann_docs, ann_gaz, gold, ann_schema, ann_out);
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "fit the BiGRU-CRF tagger");
  std::string tr_data, tr_docs, tr_out;
  std::optional<double> tr_dev;
  train_cmd->add_option("--data", tr_data, "label file")->required();
  train_cmd->add_option("--docs", tr_docs)->required();
  train_cmd->add_option("--dev-split", tr_dev, "dev fraction (default from config, else 0.2)");
  train_cmd->add_option("--out", tr_out, "model file")->required();
  train_cmd->callback([&] {
    action = [&] {
      auto c = load_config(g, false);
      auto outcome = pipeline::run_train(tr_data, tr_docs, tr_dev.value_or(c.dev_split), c, tr_out);
      const auto& r = outcome.result;
      for (const auto& e : r.history)
        log(g, "epoch " + std::to_string(e.epoch) + " nll " + std::to_string(e.train_nll) + " dev_f1 " +
                   std::to_string(e.dev_f1));
      std::cout << "best epoch " << r.best_epoch << ", dev F1 "
                << (r.history.empty() ? 0.0 : r.history[r.best_epoch - 1].dev_f1) << ", model hash "
                << hex64(r.model.hash()) << '\n';
      if (r.dropped_boundary_spans)
        std::cerr << "warning: " << r.dropped_boundary_spans << " spans crossed a split point and were dropped\n";
    };
  });

  // extract
  auto* ex_cmd = app.add_subcommand("extract", "tag documents and assemble events");
  std::string ex_model, ex_docs, ex_out, ex_pred;
  ex_cmd->add_option("--model", ex_model)->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--docs", ex_docs)->required();
  ex_cmd->add_option("--out", ex_out, "events JSON-lines")->required();
  ex_cmd->add_option("--pred-out", ex_pred, "also write predicted labels");
  ex_cmd->callback([&] {
    action = [&] {
      std::optional<fs::path> pred;
      if (!ex_pred.empty()) pred = ex_pred;
      pipeline::run_extract(ex_model, ex_docs, ex_out, pred);
    };
  });

  // eval
  auto* ev_cmd = app.add_subcommand("eval", "span-level P/R/F1 of predictions against gold");
  std::string ev_gold, ev_pred, ev_schema, ev_ids, ev_out;
  ev_cmd->add_option("--gold", ev_gold)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--pred", ev_pred)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--schema", ev_schema, "label schema (default: from --config)");
  ev_cmd->add_option("--ids", ev_ids, "JSON array of record ids to score");
  ev_cmd->add_option("--out", ev_out)->required();
  ev_cmd->callback([&] {
    action = [&] {
      fs::path schema = ev_schema;
      if (schema.empty()) schema = load_config(g, false).schema;
      if (schema.empty()) throw ConfigError("eval needs --schema or a config with a schema");
      std::optional<fs::path> ids;
      if (!ev_ids.empty()) ids = ev_ids;
      auto r = pipeline::run_eval(ev_gold, ev_pred, schema, ids, ev_out);
      std::cout << "P " << r.precision << "  R " << r.recall << "  F1 " << r.f1 << "  token acc "
                << r.token_accuracy << '\n';
    };
  });

  // report
  auto* rep_cmd = app.add_subcommand("report", "accuracy matrix over a directory of eval reports");
  std::string rep_runs, rep_out;
  rep_cmd->add_option("--runs", rep_runs)->required();
  rep_cmd->add_option("--out", rep_out, "also write the matrix as JSON");
  rep_cmd->callback([&] {
    action = [&] {
      auto m = pipeline::run_report(rep_runs);
      std::cout << m.render_text();
      if (!rep_out.empty()) std::ofstream(rep_out) << m.to_json().dump(1) << '\n';
    };
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "execute every stage from one config");
  int run_rc = 0;
  run_cmd->callback([&] {
    action = [&] {
      auto c = load_config(g, true);
      auto r = pipeline::run_pipeline(c);
      for (const auto& s : r.skipped) log(g, "skipped " + s);
      for (const auto& s : r.executed) log(g, "ran " + s);
      if (r.exit_code) std::cerr << "xbc: " << r.error << '\n';
      run_rc = r.exit_code;
    };
  });

  // serve-embed
  auto* se_cmd = app.add_subcommand("serve-embed", "serve an embedder over HTTP (POST /embed)");
  std::string se_model, se_host = "127.0.0.1";
  int se_port = 8089;
  se_cmd->add_option("--model", se_model, "serve this model's (trained) embedding table");
  se_cmd->add_option("--host", se_host)->capture_default_str();
  se_cmd->add_option("--port", se_port)->capture_default_str();
  se_cmd->callback([&] {
    action = [&] {
      std::shared_ptr<const embed::Embedder> e;
      Matrix table;
      if (!se_model.empty()) {
        auto m = model::load_model(se_model);
        e = embed::make_embedder(m.embedder_config());
        table = m.params().embed_table;
      } else {
        auto c = load_config(g, false);
        if (c.embedder.backend == embed::Backend::kRemote)
          throw ConfigError("embedder.backend: cannot serve a remote backend");
        e = embed::make_embedder(c.embedder);
        table = e->initial_table();
      }
      embed::EmbedService service(e, table);
      g_service = &service;
      std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
      });
      std::cerr << "listening on " << se_host << ':' << se_port << '\n';
      service.listen(se_host, se_port);
      g_service = nullptr;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : pipeline::exit_code_for(ErrorClass::kConfig);
  }

  try {
    if (!seed_text.empty()) {
      try {
        g.seed = std::stoull(seed_text);
      } catch (const std::exception&) {
        throw ConfigError("--seed must be an unsigned integer");
      }
    }
    if (action) action();
    return run_rc;
  } catch (const Error& e) {
    std::cerr << "xbc: " << e.what() << '\n';
    return pipeline::exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "xbc: " << e.what() << '\n';
    return 1;
  }
}

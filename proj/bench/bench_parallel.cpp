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

// Serial reference loops against the OpenMP kernels on the three
// corpus-level hot paths. Inputs are the committed fixtures, replicated.

#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "xbc/langid.hpp"
#include "xbc/preprocess.hpp"
#include "xbc/train.hpp"

using namespace xbc;

namespace {

std::vector<ingest::RawFeedRecord> heldout_corpus(std::size_t copies) {
  std::vector<ingest::RawFeedRecord> out;
  for (std::size_t c = 0; c < copies; ++c)
    for (const char* lang : {"en", "ru", "el"}) {
      std::ifstream in(testing::data_dir() / "langid" / "heldout" / (std::string(lang) + ".txt"));
      for (std::string l; std::getline(in, l);) {
        if (l.empty()) continue;
        ingest::RawFeedRecord r;
        r.record_id = out.size() + 1;
        r.text = l;
        out.push_back(std::move(r));
      }
    }
  return out;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::kParallel : Exec::kSerial; }

void BM_DetectAll(benchmark::State& state) {
  static const auto corpus = heldout_corpus(8);
  static const auto profiles = langid::load_profiles(testing::data_dir() / "langid" / "profiles.json");
  for (auto _ : state) benchmark::DoNotOptimize(langid::detect_all(corpus, profiles, 10, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * corpus.size());
}

void BM_PreprocessCorpus(benchmark::State& state) {
  static const auto corpus = heldout_corpus(8);
  static const auto resources = preprocess::load_resources(testing::data_dir() / "resources");
  static const std::vector<std::string> langs = [] {
    std::vector<std::string> l;
    for (std::size_t i = 0; i < corpus.size(); ++i) l.push_back(i % 360 < 120 ? "en" : i % 360 < 240 ? "ru" : "el");
    return l;
  }();
  for (auto _ : state)
    benchmark::DoNotOptimize(preprocess::preprocess_corpus(corpus, langs, resources, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * corpus.size());
}

void BM_BatchGradient(benchmark::State& state) {
  const auto dir = testing::data_dir() / "fixtures" / "multitoken";
  static const auto schema = annotate::load_schema(dir / "schema.json");
  static const auto data = testing::read_conll(dir / "train.conll", schema);
  static const auto m = model::SequenceModel::create(schema, embed::EmbedderConfig{}, {32, model::Decoder::kCrf, true}, 1);
  std::vector<const annotate::TaggedSequence*> batch;
  for (const auto& s : data) batch.push_back(&s);
  for (auto _ : state) benchmark::DoNotOptimize(model::batch_gradient(m, batch, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * batch.size());
}

}  // namespace

BENCHMARK(BM_DetectAll)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PreprocessCorpus)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

// Copyright (c) 2026 The sembed Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "sembed/autograd.h"
#include "sembed/batch.h"
#include "sembed/bm25.h"
#include "sembed/flow.h"
#include "sembed/metrics.h"
#include "sembed/model.h"
#include "sembed/noise.h"
#include "sembed/objectives.h"
#include "sembed/rng.h"
#include "sembed/tensor.h"
#include "sembed/vocab.h"

namespace {

using namespace sembed;

Tensor random_tensor(Shape shape, uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.vec()) v = rng.normal(0.0, 1.0);
  return t;
}

Vocabulary bench_vocab(int64_t content_words) {
  std::vector<std::string> toks;
  toks.reserve(static_cast<size_t>(content_words));
  for (int64_t i = 0; i < content_words; ++i) {
    toks.push_back("w" + std::to_string(i));
  }
  return Vocabulary::from_tokens(toks);
}

std::vector<std::vector<int64_t>> bench_sentences(int64_t n, int64_t len,
                                                  int64_t content_words,
                                                  uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int64_t>> out;
  out.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    std::vector<int64_t> sent(static_cast<size_t>(len));
    for (int64_t& id : sent) {
      id = kNumSpecials +
           static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(content_words)));
    }
    out.push_back(std::move(sent));
  }
  return out;
}

ModelConfig bench_model_config() {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 64;
  cfg.heads = 4;
  cfg.ffn = 128;
  cfg.vocab_size = 205;
  cfg.max_len = 32;
  cfg.dropout = 0.1;
  return cfg;
}

void BM_Matmul(benchmark::State& state) {
  int64_t n = state.range(0);
  Tensor a = random_tensor({n, n}, 1);
  Tensor b = random_tensor({n, n}, 2);
  for (auto _ : state) {
    Tape tape;
    Var c = matmul(tape.constant(a), tape.constant(b));
    benchmark::DoNotOptimize(c.value().vec().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_EncoderForward(benchmark::State& state) {
  ModelConfig cfg = bench_model_config();
  TransformerEncoder enc(cfg, 7, "encoder");
  auto sents = bench_sentences(state.range(0), 16, 200, 3);
  std::vector<std::vector<int64_t>> with_cls;
  for (auto s : sents) {
    s.insert(s.begin(), kClsId);
    with_cls.push_back(std::move(s));
  }
  PaddedBatch batch = pad_sequences(with_cls);
  for (auto _ : state) {
    Tape tape;
    Var h = enc.forward(tape, batch, false);
    benchmark::DoNotOptimize(h.value().vec().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForward)->Arg(1)->Arg(8)->Arg(32);

void BM_TsdaeForwardBackward(benchmark::State& state) {
  ModelConfig cfg = bench_model_config();
  Vocabulary vocab = bench_vocab(200);
  cfg.vocab_size = vocab.size();
  TransformerEncoder enc(cfg, 7, "encoder");
  TransformerDecoder dec(cfg, 7, "decoder");
  tie_parameters(enc, dec);
  auto sents = bench_sentences(8, 12, 200, 4);
  Rng noise_rng(5);
  TsdaeBatch batch = make_tsdae_batch(sents, NoiseSpec{}, vocab, noise_rng,
                                      cfg.max_len);
  for (auto _ : state) {
    Tape tape;
    Var loss = tsdae_loss(tape, enc, dec, batch);
    GradientMap grads = tape.backward(loss);
    benchmark::DoNotOptimize(grads.size());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_TsdaeForwardBackward);

void BM_Corrupt(benchmark::State& state) {
  Vocabulary vocab = bench_vocab(200);
  auto sents = bench_sentences(1000, 10, 200, 6);
  Rng rng(9);
  NoiseSpec spec{NoiseKind::kDelete, 0.6};
  size_t i = 0;
  for (auto _ : state) {
    auto out = corrupt(sents[i % sents.size()], spec, vocab, rng);
    benchmark::DoNotOptimize(out.data());
    ++i;
  }
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_Corrupt);

void BM_AveragePrecision(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(11);
  std::vector<double> scores(static_cast<size_t>(n));
  std::vector<int> labels(static_cast<size_t>(n));
  for (auto& s : scores) s = rng.uniform();
  for (auto& l : labels) l = rng.uniform() < 0.1 ? 1 : 0;
  labels[0] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_precision(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(10000);

void BM_Spearman(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(12);
  std::vector<double> x(static_cast<size_t>(n)), y(static_cast<size_t>(n));
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal(0.0, 1.0);
    y[i] = x[i] + rng.normal(0.0, 0.5);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(spearman(x, y));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Spearman)->Arg(1000)->Arg(10000);

void BM_Bm25ScoreAll(benchmark::State& state) {
  Rng rng(13);
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 2000; ++d) {
    std::vector<std::string> doc(12);
    for (auto& w : doc) w = "w" + std::to_string(rng.uniform_int(500));
    docs.push_back(std::move(doc));
  }
  Bm25Index index(docs);
  std::vector<std::string> query = {"w1", "w42", "w99", "w7"};
  for (auto _ : state) {
    auto scores = index.score_all(query);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_Bm25ScoreAll);

void BM_FlowTransform(benchmark::State& state) {
  FlowConfig fc;
  fc.dim = 64;
  fc.layers = 4;
  fc.hidden = 64;
  CouplingFlow flow(fc, 14, "flow");
  Rng perturb(15);
  for (const ParamPtr& p : flow.parameters()) {
    for (double& v : p->value.vec()) v += perturb.normal(0.0, 0.1);
  }
  Tensor x = random_tensor({64, 64}, 16);
  for (auto _ : state) {
    Tensor z = flow.transform_values(x);
    benchmark::DoNotOptimize(z.vec().data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_FlowTransform);

}  // namespace

BENCHMARK_MAIN();

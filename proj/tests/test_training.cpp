// Copyright 2026 The ssm-asr Authors
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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ssm_asr/checkpoint.hpp"
#include "ssm_asr/errors.hpp"
#include "ssm_asr/evaluate.hpp"
#include "ssm_asr/optim.hpp"
#include "ssm_asr/synth.hpp"
#include "ssm_asr/trainer.hpp"
#include "test_util.hpp"

using namespace ssm_asr;
using ssm_asr::testing::max_abs_diff;

namespace {

namespace fs = std::filesystem;

struct TinyCorpus {
  fs::path dir;
  Vocab vocab;
  FrontendConfig frontend;
  std::vector<Utterance> train;
  std::vector<Utterance> val;
};

const TinyCorpus& tiny_corpus() {
  static const TinyCorpus corpus = [] {
    TinyCorpus c;
    c.dir = fs::temp_directory_path() / "ssm_asr_test_training_corpus";
    fs::remove_all(c.dir);
    SynthSpec spec;
    spec.n_utterances = 10;
    spec.max_digits = 2;
    const SynthCorpus sc = synth_corpus(spec, c.dir);
    std::vector<std::string> texts;
    for (const auto& e : sc.train) texts.push_back(e.text);
    c.vocab = train_bpe(texts, 516);
    c.frontend.target_samples = 8000;
    c.train = load_utterances(c.dir / "train.jsonl", c.vocab, c.frontend, 32);
    c.val = load_utterances(c.dir / "val.jsonl", c.vocab, c.frontend, 32);
    return c;
  }();
  return corpus;
}

ModelConfig small_config(std::size_t vocab) {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_encoder_layers = 1;
  cfg.n_decoder_layers = 1;
  cfg.d_state = 4;
  cfg.d_inner = 32;
  cfg.vocab_size = vocab;
  cfg.max_text_len = 32;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("lr schedule is linear decay without warmup") {
  TrainConfig cfg;
  cfg.total_steps = 1000;
  CHECK(lr_schedule(0, cfg) == 1e-4);
  CHECK(lr_schedule(1000, cfg) == 0.0);
  CHECK(lr_schedule(500, cfg) == doctest::Approx(5e-5).epsilon(1e-15));
  for (std::uint64_t s = 1; s + 1 <= 1000; ++s) {
    const double second = lr_schedule(s + 1, cfg) - 2.0 * lr_schedule(s, cfg) + lr_schedule(s - 1, cfg);
    CHECK(std::abs(second) < 1e-18);
    CHECK(lr_schedule(s, cfg) <= lr_schedule(s - 1, cfg));
  }
  CHECK_THROWS_AS(lr_schedule(1001, cfg), ContractError);
  cfg.total_steps = 0;
  CHECK_THROWS_AS(lr_schedule(0, cfg), ContractError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.beta1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lr0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("gradient clipping") {
  std::vector<Tensor> p{Tensor::from({2}, {0, 0}, true)};
  p[0].mutable_grad()[0] = 3.0;
  p[0].mutable_grad()[1] = 4.0;
  CHECK(clip_grad_norm(p, 1.0) == doctest::Approx(0.2));
  CHECK(p[0].grad()[0] == doctest::Approx(0.6));
  CHECK(p[0].grad()[1] == doctest::Approx(0.8));
  CHECK(global_grad_norm(p) <= 1.0 + 1e-9);

  p[0].mutable_grad()[0] = 0.3;
  p[0].mutable_grad()[1] = 0.4;
  CHECK(clip_grad_norm(p, 1.0) == 1.0);
  CHECK(p[0].grad()[0] == 0.3);

  std::mt19937_64 rng(41);
  std::normal_distribution<double> dist(0.0, 5.0);
  std::vector<Tensor> many{Tensor::zeros({7}, true), Tensor::zeros({3, 2}, true)};
  std::vector<double> before;
  for (auto& t : many)
    for (double& g : t.mutable_grad()) before.push_back(g = dist(rng));
  const double factor = clip_grad_norm(many, 0.5);
  CHECK(global_grad_norm(many) <= 0.5 + 1e-9);
  std::size_t i = 0;
  for (auto& t : many)
    for (double g : t.grad()) CHECK(g == doctest::Approx(before[i++] * factor).epsilon(1e-14));
  CHECK(factor > 0.0);

  many[0].mutable_grad()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(clip_grad_norm(many, 1.0), DivergenceError);
  CHECK_THROWS_AS(clip_grad_norm(many, 0.0), ContractError);
}

TEST_CASE("adamw single step hand value") {
  std::vector<Tensor> p{Tensor::from({1}, {1.0}, true)};
  p[0].mutable_grad()[0] = 1.0;
  OptimizerState s = OptimizerState::for_params(p);
  adamw_step(p, s, 0.1, TrainConfig{});
  CHECK(std::abs(p[0][0] - 0.899) <= 1e-8);
  CHECK(p[0][0] == doctest::Approx(1.0 - 0.1 * (1.0 / (1.0 + 1e-8) + 0.01)).epsilon(1e-15));
  CHECK(s.step == 1);
}

TEST_CASE("adamw with zero gradient and no decay leaves weights unchanged") {
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  std::vector<Tensor> p{Tensor::from({3}, {1.0, -2.0, 0.5}, true)};
  p[0].mutable_grad();
  OptimizerState s = OptimizerState::for_params(p);
  adamw_step(p, s, 0.1, cfg);
  CHECK(std::vector<double>(p[0].data().begin(), p[0].data().end()) == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("adamw without decay reproduces Adam") {
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<Tensor> p{Tensor::from({4}, {0.3, -1.2, 2.0, 0.0}, true)};
  OptimizerState s = OptimizerState::for_params(p);
  std::vector<double> w{0.3, -1.2, 2.0, 0.0}, m(4, 0.0), v(4, 0.0);
  for (int step = 1; step <= 10; ++step) {
    p[0].zero_grad();
    for (std::size_t i = 0; i < 4; ++i) p[0].mutable_grad()[i] = dist(rng);
    const double lr = 0.01 * step;
    for (std::size_t i = 0; i < 4; ++i) {
      const double g = p[0].grad()[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1.0 - std::pow(0.9, step));
      const double vh = v[i] / (1.0 - std::pow(0.999, step));
      w[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
    adamw_step(p, s, lr, cfg);
    CHECK(max_abs_diff(p[0].data(), w) < 1e-12);
  }
}

TEST_CASE("initial loss is close to uniform prediction") {
  const TinyCorpus& c = tiny_corpus();
  ModelConfig cfg;
  cfg.vocab_size = static_cast<std::size_t>(c.vocab.size());
  cfg.max_text_len = 32;
  const Model model(cfg, 0);
  std::vector<const Utterance*> batch;
  for (const auto& u : c.train) batch.push_back(&u);
  const double loss = batch_loss(batch, model, false);
  CHECK(std::abs(loss - std::log(static_cast<double>(cfg.vocab_size))) < 0.5);
}

TEST_CASE("batch loss pads with PAD and pools over tokens") {
  const TinyCorpus& c = tiny_corpus();
  const Model model(small_config(static_cast<std::size_t>(c.vocab.size())), 3);
  const Utterance* a = &c.train[0];
  const Utterance* b = &c.train[1];
  const std::vector<const Utterance*> both{a, b};
  const double la = batch_loss(std::vector<const Utterance*>{a}, model, false);
  const double lb = batch_loss(std::vector<const Utterance*>{b}, model, false);
  const double na = static_cast<double>(a->tokens.size() - 1), nb = static_cast<double>(b->tokens.size() - 1);
  CHECK(batch_loss(both, model, false) == doctest::Approx((la * na + lb * nb) / (na + nb)).epsilon(1e-12));
  CHECK_THROWS_AS(batch_loss(std::vector<const Utterance*>{}, model, false), ContractError);
}

TEST_CASE("repeated train_step overfits one sample") {
  const TinyCorpus& c = tiny_corpus();
  ModelConfig cfg;
  cfg.vocab_size = static_cast<std::size_t>(c.vocab.size());
  cfg.max_text_len = 32;
  const Model model(cfg, 0);
  TrainConfig tc;
  tc.lr0 = 1e-3;
  tc.total_steps = 500;
  std::vector<Tensor> params = trainable_parameters(model);
  OptimizerState state = OptimizerState::for_params(params);
  const std::vector<const Utterance*> batch{&c.train[0]};
  double loss = 0.0;
  std::uint64_t steps = 0;
  while (steps < 500) {
    loss = train_step(batch, model, params, state, tc).loss;
    ++steps;
    if (loss < 0.01) break;
  }
  MESSAGE("single-sample loss " << loss << " after " << steps << " steps");
  CHECK(loss < 0.01);
  CHECK(transcribe(c.train[0].mel, model, c.vocab) == c.train[0].text);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const TinyCorpus& c = tiny_corpus();
  auto run = [&]() {
    const Model model(small_config(static_cast<std::size_t>(c.vocab.size())), 5);
    TrainConfig tc;
    tc.lr0 = 3e-3;
    tc.total_steps = 6;
    std::vector<Tensor> params = trainable_parameters(model);
    OptimizerState state = OptimizerState::for_params(params);
    std::vector<double> losses;
    for (int i = 0; i < 6; ++i) {
      std::vector<const Utterance*> batch{&c.train[i % c.train.size()], &c.train[(i + 1) % c.train.size()]};
      losses.push_back(train_step(batch, model, params, state, tc).loss);
    }
    return losses;
  };
  const auto a = run();
  CHECK(a == run());
  CHECK(a.back() < a.front());
}

TEST_CASE("non-finite parameters abort the step with a divergence error") {
  const TinyCorpus& c = tiny_corpus();
  const Model model(small_config(static_cast<std::size_t>(c.vocab.size())), 6);
  auto bias = model.params().head_bias;
  bias.mutable_data()[0] = std::numeric_limits<double>::infinity();
  TrainConfig tc;
  tc.total_steps = 1;
  std::vector<Tensor> params = trainable_parameters(model);
  OptimizerState state = OptimizerState::for_params(params);
  CHECK_THROWS_AS(train_step(std::vector<const Utterance*>{&c.train[0]}, model, params, state, tc), DivergenceError);
}

TEST_CASE("checkpoint round trip preserves logits") {
  const TinyCorpus& c = tiny_corpus();
  ModelConfig cfg = small_config(static_cast<std::size_t>(c.vocab.size()));
  const Model model(cfg, 7);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  for (auto [name, t] : model.named_parameters())
    for (double& v : t.mutable_data()) v += dist(rng);
  TrainConfig tc;
  tc.total_steps = 77;
  tc.seed = 9;
  std::vector<Tensor> params = trainable_parameters(model);
  OptimizerState state = OptimizerState::for_params(params);
  state.step = 12;
  state.m[0][0] = 0.25;
  const fs::path path = c.dir / "roundtrip.ckpt";
  save_checkpoint(path, model, tc, c.frontend, state, 12, c.vocab.hash());
  const LoadedCheckpoint loaded = load_checkpoint(path);
  CHECK(loaded.step == 12);
  CHECK(loaded.vocab_hash == c.vocab.hash());
  CHECK(loaded.train.seed == 9);
  CHECK(loaded.train.total_steps == 77);
  CHECK(loaded.frontend.target_samples == c.frontend.target_samples);
  CHECK(loaded.optimizer.step == 12);
  CHECK(loaded.optimizer.m[0][0] == 0.25);
  CHECK(loaded.model.config().d_model == cfg.d_model);

  NoGradScope ng;
  const Utterance& u = c.train[0];
  const Tensor before = decoder_forward(u.tokens, encoder_forward(u.mel, model), model);
  const Tensor after = decoder_forward(u.tokens, encoder_forward(u.mel, loaded.model), loaded.model);
  CHECK(max_abs_diff(before.data(), after.data()) < 1e-5);

  std::string bytes = slurp(path);
  {
    std::ofstream out(c.dir / "bad_magic.ckpt", std::ios::binary);
    std::string bad = bytes;
    bad[0] = 'X';
    out << bad;
  }
  CHECK_THROWS_AS(load_checkpoint(c.dir / "bad_magic.ckpt"), IoError);
  {
    std::ofstream out(c.dir / "short.ckpt", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(c.dir / "short.ckpt"), IoError);
  CHECK_THROWS_AS(load_checkpoint(c.dir / "missing.ckpt"), IoError);
}

TEST_CASE("train loop writes metrics and checkpoints each epoch") {
  const TinyCorpus& c = tiny_corpus();
  const Model model(small_config(static_cast<std::size_t>(c.vocab.size())), 10);
  TrainConfig tc;
  tc.lr0 = 3e-3;
  tc.epochs = 3;
  tc.batch_size = 4;
  TrainLoopOptions opts;
  opts.out_dir = c.dir / "run";
  fs::remove_all(opts.out_dir);
  std::size_t callbacks = 0;
  opts.on_epoch = [&](const MetricsRow&) { ++callbacks; };
  const TrainResult r = train_loop(model, c.train, c.val, tc, c.frontend, c.vocab, opts);
  CHECK(callbacks == 3);
  CHECK(r.metrics.size() == 3);
  CHECK(r.steps == 3 * steps_per_epoch(c.train.size(), 4));
  CHECK(r.metrics.back().step == r.steps);
  CHECK(fs::exists(opts.out_dir / "last.ckpt"));
  CHECK(fs::exists(opts.out_dir / "best.ckpt"));
  std::istringstream csv(slurp(opts.out_dir / "metrics.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == kMetricsHeader);
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == tc.epochs);
  CHECK(load_checkpoint(opts.out_dir / "last.ckpt").step == r.steps);

  const Model other(small_config(static_cast<std::size_t>(c.vocab.size()) + 1), 10);
  CHECK_THROWS_AS(train_loop(other, c.train, c.val, tc, c.frontend, c.vocab, TrainLoopOptions{}), VocabError);
}

TEST_CASE("load_utterances enforces the text length limit") {
  const TinyCorpus& c = tiny_corpus();
  CHECK_THROWS_AS(load_utterances(c.dir / "train.jsonl", c.vocab, c.frontend, 3), LengthError);
  for (const auto& u : c.train) {
    CHECK(u.tokens.front() == c.vocab.sot());
    CHECK(u.tokens.back() == c.vocab.eot());
    CHECK(u.mel.frames() == frame_count(8000, 400, 160));
  }
}

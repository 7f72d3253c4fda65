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

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/grad_check.hpp"
#include "ssm_asr/model.hpp"
#include "ssm_asr/ops.hpp"
#include "test_util.hpp"

using namespace ssm_asr;
using ssm_asr::testing::max_abs_diff;
using ssm_asr::testing::random_tensor;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_encoder_layers = 2;
  cfg.n_decoder_layers = 2;
  cfg.d_state = 4;
  cfg.d_inner = 16;
  cfg.vocab_size = 260;
  cfg.max_text_len = 16;
  cfg.n_mels = 6;
  return cfg;
}

// Replaces the zero-initialized output projections so every block is live.
void randomize_out_projections(const Model& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (auto [name, t] : model.named_parameters()) {
    if (name.size() >= 8 && name.compare(name.size() - 8, 8, "out_proj") == 0) {
      for (double& v : t.mutable_data()) v = dist(rng);
    }
  }
}

TokenSequence random_tokens(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, static_cast<int>(vocab) - 1);
  TokenSequence ids(n);
  for (auto& id : ids) id = dist(rng);
  return ids;
}

}  // namespace

TEST_CASE("config validation and special tokens") {
  ModelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.max_text_len = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ModelConfig{};
  cfg.vocab_size = 100;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const SpecialTokens sp = special_tokens(516);
  CHECK(sp.pad == 512);
  CHECK(sp.sot == 513);
  CHECK(sp.eot == 514);
  CHECK(sp.transcribe == 515);
}

TEST_CASE("parameter count matches the closed form") {
  for (const ModelConfig& cfg : {ModelConfig{}, tiny_config()}) {
    const Model model(cfg, 1);
    std::size_t total = 0;
    for (const auto& [name, t] : model.named_parameters()) total += t.numel();
    CHECK(total == model.parameter_count());
    CHECK(total == expected_parameter_count(cfg));
  }
  const Model model(tiny_config(), 1);
  std::vector<std::string> names;
  for (const auto& [name, t] : model.named_parameters()) names.push_back(name);
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

TEST_CASE("encoder downsamples by two") {
  const ModelConfig cfg = tiny_config();
  const Model model(cfg, 2);
  std::mt19937_64 rng(3);
  NoGradScope ng;
  for (std::size_t frames : {998u, 97u, 4u}) {
    const EncoderOutput enc = encoder_forward(random_tensor({frames, cfg.n_mels}, rng), model);
    CHECK(enc.length() == (frames + 1) / 2);
    CHECK(enc.features.dim(1) == cfg.d_model);
  }
  CHECK_THROWS_AS(encoder_forward(random_tensor({10, cfg.n_mels + 1}, rng), model), ShapeError);
}

TEST_CASE("encoder perturbations only reach later positions") {
  const ModelConfig cfg = tiny_config();
  const Model model(cfg, 4);
  randomize_out_projections(model, 5);
  std::mt19937_64 rng(6);
  const Tensor mel = random_tensor({40, cfg.n_mels}, rng);
  NoGradScope ng;
  const EncoderOutput base = encoder_forward(mel, model);
  for (std::size_t t : {0u, 9u, 10u, 11u, 25u, 39u}) {
    std::vector<double> v(mel.data().begin(), mel.data().end());
    v[t * cfg.n_mels + 2] += 0.5;
    const EncoderOutput pert = encoder_forward(Tensor::from(mel.shape(), v), model);
    const std::size_t first = t == 0 ? 0 : (t - 1) / 2;
    CAPTURE(t);
    for (std::size_t s = 0; s < base.length(); ++s) {
      const double diff = max_abs_diff(base.features.data().subspan(s * cfg.d_model, cfg.d_model),
                                       pert.features.data().subspan(s * cfg.d_model, cfg.d_model));
      if (s < first) {
        CHECK(diff == 0.0);
      } else if (s == first) {
        CHECK(diff > 0.0);
      }
    }
  }
}

TEST_CASE("cross connection is the identity at init and causal in the decoder") {
  const ModelConfig cfg = tiny_config();
  const Model model(cfg, 7);
  std::mt19937_64 rng(8);
  NoGradScope ng;
  const EncoderOutput enc{random_tensor({5, cfg.d_model}, rng)};
  const Tensor hidden = random_tensor({6, cfg.d_model}, rng);
  const auto& block = model.params().decoder[0].cross;
  CHECK(max_abs_diff(cross_connection(hidden, enc, block, cfg.block()).data(), hidden.data()) == 0.0);

  randomize_out_projections(model, 9);
  const Tensor base = cross_connection(hidden, enc, block, cfg.block());
  CHECK(base.shape() == hidden.shape());
  std::vector<double> h(hidden.data().begin(), hidden.data().end());
  h[3 * cfg.d_model] += 1.0;
  const Tensor pert = cross_connection(Tensor::from(hidden.shape(), h), enc, block, cfg.block());
  CHECK(max_abs_diff(base.data().subspan(0, 3 * cfg.d_model), pert.data().subspan(0, 3 * cfg.d_model)) == 0.0);

  std::vector<double> e(enc.features.data().begin(), enc.features.data().end());
  e[0] += 1.0;
  const Tensor moved = cross_connection(hidden, EncoderOutput{Tensor::from(enc.features.shape(), e)}, block, cfg.block());
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(max_abs_diff(base.data().subspan(t * cfg.d_model, cfg.d_model),
                       moved.data().subspan(t * cfg.d_model, cfg.d_model)) > 0.0);
  }
}

TEST_CASE("decoder logits shape, errors, and causality") {
  const ModelConfig cfg = tiny_config();
  const Model model(cfg, 10);
  randomize_out_projections(model, 11);
  std::mt19937_64 rng(12);
  NoGradScope ng;
  const EncoderOutput enc = encoder_forward(random_tensor({20, cfg.n_mels}, rng), model);
  const TokenSequence tokens = random_tokens(9, cfg.vocab_size, rng);
  const Tensor logits = decoder_forward(tokens, enc, model);
  CHECK(logits.shape() == Shape{9, cfg.vocab_size});
  for (int i = 0; i < 50; ++i) {
    std::uniform_int_distribution<std::size_t> pos(0, tokens.size() - 1);
    const std::size_t t = pos(rng);
    TokenSequence changed = tokens;
    changed[t] = (changed[t] + 1 + static_cast<int>(rng() % (cfg.vocab_size - 1))) % static_cast<int>(cfg.vocab_size);
    const Tensor pert = decoder_forward(changed, enc, model);
    CHECK(max_abs_diff(logits.data().subspan(0, t * cfg.vocab_size), pert.data().subspan(0, t * cfg.vocab_size)) <
          1e-9);
    CHECK(max_abs_diff(logits.data().subspan(t * cfg.vocab_size, cfg.vocab_size),
                       pert.data().subspan(t * cfg.vocab_size, cfg.vocab_size)) > 0.0);
  }
  const EncoderOutput other = encoder_forward(random_tensor({20, cfg.n_mels}, rng), model);
  CHECK(max_abs_diff(decoder_forward(tokens, other, model).data(), logits.data()) > 1e-6);

  CHECK_THROWS_AS(decoder_forward(TokenSequence{0, 260}, enc, model), VocabError);
  CHECK_THROWS_AS(decoder_forward(random_tokens(17, cfg.vocab_size, rng), enc, model), LengthError);
}

TEST_CASE("full tiny model gradient matches finite differences") {
  const ModelConfig cfg = tiny_config();
  const Model model(cfg, 13);
  randomize_out_projections(model, 14);
  std::mt19937_64 rng(15);
  const Tensor mel = random_tensor({20, cfg.n_mels}, rng);
  const TokenSequence tokens = random_tokens(7, cfg.vocab_size, rng);
  const std::span<const TokenId> inputs(tokens.data(), 6);
  const std::span<const TokenId> targets(tokens.data() + 1, 6);
  std::vector<Tensor> params;
  for (const auto& [name, t] : model.named_parameters()) params.push_back(t);
  const double err = grad_check_params(
      [&]() {
        const EncoderOutput enc = encoder_forward(mel, model);
        REQUIRE(enc.length() == 10);
        return softmax_cross_entropy(decoder_forward(inputs, enc, model), targets, -1);
      },
      params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("incremental decoding matches full re-evaluation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ModelConfig cfg = tiny_config();
    cfg.use_skip = seed % 2 == 0;
    const Model model(cfg, 100 + seed);
    randomize_out_projections(model, 200 + seed);
    std::mt19937_64 rng(300 + seed);
    NoGradScope ng;
    const EncoderOutput enc = encoder_forward(random_tensor({14, cfg.n_mels}, rng), model);
    const TokenSequence tokens = random_tokens(cfg.max_text_len, cfg.vocab_size, rng);
    const Tensor full = decoder_forward(tokens, enc, model);
    DecodeSession session(model, enc);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const auto logits = session.step(tokens[t]);
      CHECK(max_abs_diff(logits, full.data().subspan(t * cfg.vocab_size, cfg.vocab_size)) < 1e-9);
    }
    CHECK(session.position() == tokens.size());
    CHECK_THROWS_AS(session.step(tokens[0]), LengthError);
  }
}

TEST_CASE("argmax ties go to the lowest id") {
  const std::vector<double> logits{0.1, 0.7, 0.7, -2.0};
  CHECK(argmax_token(logits) == 1);
}

TEST_CASE("greedy decode stops at EOT and is deterministic") {
  const ModelConfig cfg = tiny_config();
  const Model model(cfg, 16);
  std::mt19937_64 rng(17);
  const MelSpectrogram mel{random_tensor({20, cfg.n_mels}, rng), cfg.n_mels, 160, 400};
  const TokenSequence a = greedy_decode(mel, model, cfg.max_text_len);
  const TokenSequence b = greedy_decode(mel, model, cfg.max_text_len);
  CHECK(a == b);
  CHECK(a.size() <= cfg.max_text_len - 2);

  auto bias = model.params().head_bias;
  bias.mutable_data()[special_tokens(cfg.vocab_size).eot] = 1e3;
  CHECK(greedy_decode(mel, model, cfg.max_text_len).empty());
  bias.mutable_data()[special_tokens(cfg.vocab_size).eot] = -1e3;
  bias.mutable_data()[65] = 1e3;
  const TokenSequence as = greedy_decode(mel, model, 5);
  CHECK(as == TokenSequence{65, 65, 65});
  CHECK_THROWS_AS(greedy_decode(mel, model, cfg.max_text_len + 1), ContractError);
}

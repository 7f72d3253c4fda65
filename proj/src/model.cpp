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

#include "ssm_asr/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/ops.hpp"

namespace ssm_asr {

namespace {

constexpr double kNormEps = 1e-5;

Tensor uniform_param(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

std::vector<double> final_logits(std::span<const double> x, const ModelParams& p, std::size_t d,
                                 std::size_t vocab) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + kNormEps);
  std::vector<double> logits(p.head_bias.data().begin(), p.head_bias.data().end());
  const auto head = p.head.data();
  for (std::size_t i = 0; i < d; ++i) {
    const double xn = (x[i] - mu) * inv * p.dec_norm_gain[i] + p.dec_norm_bias[i];
    const double* row = head.data() + i * vocab;
    for (std::size_t v = 0; v < vocab; ++v) logits[v] += xn * row[v];
  }
  return logits;
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model == 0 || n_encoder_layers == 0 || n_decoder_layers == 0 || d_state == 0 ||
      d_inner == 0 || conv_kernel == 0 || vocab_size == 0 || n_mels == 0) {
    throw ConfigError("model config values must be positive");
  }
  if (vocab_size < static_cast<std::size_t>(Vocab::kByteCount + Vocab::kSpecialCount)) {
    throw ConfigError("vocab_size must cover the byte alphabet and special tokens");
  }
  if (max_text_len < 3) throw ConfigError("max_text_len must be at least 3");
}

MambaBlockConfig ModelConfig::block() const {
  MambaBlockConfig b;
  b.d_model = d_model;
  b.d_inner = d_inner;
  b.d_state = d_state;
  b.conv_kernel = conv_kernel;
  b.use_skip = use_skip;
  b.scan_mode = scan_mode;
  b.norm_eps = kNormEps;
  return b;
}

SpecialTokens special_tokens(std::size_t vocab_size) {
  const auto v = static_cast<TokenId>(vocab_size);
  return {v - 4, v - 3, v - 2, v - 1};
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg_.d_model;
  const MambaBlockConfig bc = cfg_.block();
  params_.stem1_kernel = uniform_param({3, cfg_.n_mels, d}, inv_sqrt(3 * cfg_.n_mels), rng);
  params_.stem1_bias = uniform_param({d}, inv_sqrt(3 * cfg_.n_mels), rng);
  params_.stem2_kernel = uniform_param({3, d, d}, inv_sqrt(3 * d), rng);
  params_.stem2_bias = uniform_param({d}, inv_sqrt(3 * d), rng);
  for (std::size_t i = 0; i < cfg_.n_encoder_layers; ++i) params_.encoder.push_back(init_mamba_block(bc, rng));
  params_.enc_norm_gain = Tensor::full({d}, 1.0, true);
  params_.enc_norm_bias = Tensor::zeros({d}, true);
  params_.token_embedding = uniform_param({cfg_.vocab_size, d}, inv_sqrt(d), rng);
  params_.pos_embedding = uniform_param({cfg_.max_text_len, d}, inv_sqrt(d), rng);
  for (std::size_t i = 0; i < cfg_.n_decoder_layers; ++i) {
    DecoderLayerParams layer;
    layer.self = init_mamba_block(bc, rng);
    layer.cross = init_mamba_block(bc, rng);
    params_.decoder.push_back(std::move(layer));
  }
  params_.dec_norm_gain = Tensor::full({d}, 1.0, true);
  params_.dec_norm_bias = Tensor::zeros({d}, true);
  params_.head = uniform_param({d, cfg_.vocab_size}, inv_sqrt(d), rng);
  params_.head_bias = uniform_param({cfg_.vocab_size}, inv_sqrt(d), rng);
}

Model::Model(const ModelConfig& cfg, ModelParams params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  if (params_.encoder.size() != cfg_.n_encoder_layers || params_.decoder.size() != cfg_.n_decoder_layers) {
    throw ConfigError("parameter layer count does not match model config");
  }
}

std::vector<NamedTensor> Model::named_parameters() const {
  std::vector<NamedTensor> out;
  out.emplace_back("stem1.kernel", params_.stem1_kernel);
  out.emplace_back("stem1.bias", params_.stem1_bias);
  out.emplace_back("stem2.kernel", params_.stem2_kernel);
  out.emplace_back("stem2.bias", params_.stem2_bias);
  for (std::size_t i = 0; i < params_.encoder.size(); ++i) {
    append_named(params_.encoder[i], "encoder." + std::to_string(i), out);
  }
  out.emplace_back("encoder.norm_gain", params_.enc_norm_gain);
  out.emplace_back("encoder.norm_bias", params_.enc_norm_bias);
  out.emplace_back("decoder.token_embedding", params_.token_embedding);
  out.emplace_back("decoder.pos_embedding", params_.pos_embedding);
  for (std::size_t i = 0; i < params_.decoder.size(); ++i) {
    append_named(params_.decoder[i].self, "decoder." + std::to_string(i) + ".self", out);
    append_named(params_.decoder[i].cross, "decoder." + std::to_string(i) + ".cross", out);
  }
  out.emplace_back("decoder.norm_gain", params_.dec_norm_gain);
  out.emplace_back("decoder.norm_bias", params_.dec_norm_bias);
  out.emplace_back("decoder.head", params_.head);
  out.emplace_back("decoder.head_bias", params_.head_bias);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.numel();
  return n;
}

std::size_t expected_parameter_count(const ModelConfig& cfg) {
  const std::size_t d = cfg.d_model;
  const std::size_t stem = 3 * cfg.n_mels * d + d + 3 * d * d + d;
  const std::size_t blocks = (cfg.n_encoder_layers + 2 * cfg.n_decoder_layers) * mamba_block_param_count(cfg.block());
  const std::size_t norms = 4 * d;
  const std::size_t embeddings = cfg.vocab_size * d + cfg.max_text_len * d;
  const std::size_t head = d * cfg.vocab_size + cfg.vocab_size;
  return stem + blocks + norms + embeddings + head;
}

EncoderOutput encoder_forward(const Tensor& mel_values, const Model& model) {
  const ModelConfig& cfg = model.config();
  const ModelParams& p = model.params();
  if (mel_values.rank() != 2 || mel_values.dim(1) != cfg.n_mels) {
    throw ShapeError("encoder expects [frames x " + std::to_string(cfg.n_mels) + "] features, got " +
                     shape_str(mel_values.shape()));
  }
  Tensor x = silu(add(conv1d(mel_values, p.stem1_kernel, 1, 1), p.stem1_bias));
  x = silu(add(conv1d(x, p.stem2_kernel, 2, 1), p.stem2_bias));
  const MambaBlockConfig bc = cfg.block();
  for (const auto& block : p.encoder) x = mamba_block(x, block, bc);
  return {layer_norm(x, p.enc_norm_gain, p.enc_norm_bias, kNormEps)};
}

EncoderOutput encoder_forward(const MelSpectrogram& mel, const Model& model) {
  if (mel.n_mels != model.config().n_mels) {
    throw ShapeError("spectrogram has " + std::to_string(mel.n_mels) + " mel bins, model expects " +
                     std::to_string(model.config().n_mels));
  }
  return encoder_forward(mel.values, model);
}

Tensor cross_connection(const Tensor& hidden, const EncoderOutput& enc, const MambaBlockParams& block,
                        const MambaBlockConfig& cfg) {
  if (hidden.rank() != 2 || hidden.dim(1) != enc.features.dim(1)) {
    throw ShapeError("cross_connection width mismatch");
  }
  const std::size_t s = enc.length();
  const Tensor joined = mamba_block(concat_rows(enc.features, hidden), block, cfg);
  return slice_rows(joined, s, s + hidden.dim(0));
}

Tensor decoder_forward(std::span<const TokenId> tokens, const EncoderOutput& enc, const Model& model) {
  const ModelConfig& cfg = model.config();
  const ModelParams& p = model.params();
  if (tokens.empty()) throw LengthError("decoder_forward: empty token sequence");
  if (tokens.size() > cfg.max_text_len) {
    throw LengthError("decoder_forward: " + std::to_string(tokens.size()) + " tokens exceed max_text_len " +
                      std::to_string(cfg.max_text_len));
  }
  Tensor x = add(embedding(p.token_embedding, tokens), slice_rows(p.pos_embedding, 0, tokens.size()));
  const MambaBlockConfig bc = cfg.block();
  for (const auto& layer : p.decoder) {
    x = mamba_block(x, layer.self, bc);
    x = cross_connection(x, enc, layer.cross, bc);
  }
  x = layer_norm(x, p.dec_norm_gain, p.dec_norm_bias, kNormEps);
  return add(matmul(x, p.head), p.head_bias);
}

DecodeSession::DecodeSession(const Model& model, const EncoderOutput& enc)
    : model_(&model), block_cfg_(model.config().block()) {
  const auto& layers = model.params().decoder;
  const std::size_t d = model.config().d_model;
  if (enc.features.dim(1) != d) throw ShapeError("DecodeSession: encoder width mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    self_states_.emplace_back(block_cfg_);
    cross_states_.emplace_back(block_cfg_);
    const auto feats = enc.features.data();
    for (std::size_t s = 0; s < enc.length(); ++s) {
      cross_states_[l].step(feats.subspan(s * d, d), layers[l].cross, block_cfg_);
    }
  }
}

std::vector<double> DecodeSession::step(TokenId token) {
  const ModelConfig& cfg = model_->config();
  const ModelParams& p = model_->params();
  if (position_ >= cfg.max_text_len) throw LengthError("DecodeSession: max_text_len reached");
  if (token < 0 || static_cast<std::size_t>(token) >= cfg.vocab_size) {
    throw VocabError("token id " + std::to_string(token) + " outside vocabulary");
  }
  const std::size_t d = cfg.d_model;
  std::vector<double> x(d);
  for (std::size_t j = 0; j < d; ++j) {
    x[j] = p.token_embedding[token * d + j] + p.pos_embedding[position_ * d + j];
  }
  for (std::size_t l = 0; l < p.decoder.size(); ++l) {
    x = self_states_[l].step(x, p.decoder[l].self, block_cfg_);
    x = cross_states_[l].step(x, p.decoder[l].cross, block_cfg_);
  }
  ++position_;
  return final_logits(x, p, d, cfg.vocab_size);
}

TokenId argmax_token(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

TokenSequence greedy_decode(const EncoderOutput& enc, const Model& model, std::size_t max_len) {
  const ModelConfig& cfg = model.config();
  if (max_len > cfg.max_text_len) throw ContractError("greedy_decode: max_len exceeds max_text_len");
  const SpecialTokens sp = special_tokens(cfg.vocab_size);
  DecodeSession session(model, enc);
  session.step(sp.sot);
  std::vector<double> logits = session.step(sp.transcribe);
  TokenSequence out;
  while (2 + out.size() < max_len) {
    const TokenId next = argmax_token(logits);
    if (next == sp.eot) break;
    out.push_back(next);
    if (2 + out.size() >= max_len) break;
    logits = session.step(next);
  }
  return out;
}

TokenSequence greedy_decode(const MelSpectrogram& mel, const Model& model, std::size_t max_len) {
  NoGradScope no_grad;
  return greedy_decode(encoder_forward(mel, model), model, max_len);
}

}  // namespace ssm_asr

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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ssm_asr/bpe.hpp"
#include "ssm_asr/frontend.hpp"
#include "ssm_asr/mamba_block.hpp"
#include "ssm_asr/tensor.hpp"

namespace ssm_asr {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_encoder_layers = 4;
  std::size_t n_decoder_layers = 4;
  std::size_t d_state = 16;
  std::size_t d_inner = 128;
  std::size_t conv_kernel = 4;
  std::size_t vocab_size = 516;
  std::size_t max_text_len = 128;
  std::size_t n_mels = 80;
  bool use_skip = true;
  ScanMode scan_mode = ScanMode::kParallel;

  void validate() const;
  MambaBlockConfig block() const;
};

// Special ids occupy the last four slots of the vocabulary (see Vocab).
struct SpecialTokens {
  TokenId pad;
  TokenId sot;
  TokenId eot;
  TokenId transcribe;
};
SpecialTokens special_tokens(std::size_t vocab_size);

struct EncoderOutput {
  Tensor features;  // [S x d_model]
  std::size_t length() const { return features.dim(0); }
};

struct DecoderLayerParams {
  MambaBlockParams self;
  MambaBlockParams cross;
};

struct ModelParams {
  Tensor stem1_kernel;  // [3 x n_mels x d]
  Tensor stem1_bias;
  Tensor stem2_kernel;  // [3 x d x d], stride 2
  Tensor stem2_bias;
  std::vector<MambaBlockParams> encoder;
  Tensor enc_norm_gain;
  Tensor enc_norm_bias;
  Tensor token_embedding;  // [V x d]
  Tensor pos_embedding;    // [max_text_len x d]
  std::vector<DecoderLayerParams> decoder;
  Tensor dec_norm_gain;
  Tensor dec_norm_bias;
  Tensor head;       // [d x V]
  Tensor head_bias;  // [V]
};

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);
  Model(const ModelConfig& cfg, ModelParams params);

  const ModelConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }

  // Stable order; names are unique and used by checkpoints.
  std::vector<NamedTensor> named_parameters() const;
  std::size_t parameter_count() const;

 private:
  ModelConfig cfg_;
  ModelParams params_;
};

// Closed form of Model::parameter_count():
//   stem        3*M*d + d + 3*d*d + d
//   blocks      (n_enc + 2*n_dec) * block, block = 2d + 2d*Di + (K+1)*Di + 3*Di*N + Di*Di + Di
//                                                  + Di*use_skip + Di*d
//   norms       4d
//   embeddings  V*d + L*d
//   head        d*V + V
std::size_t expected_parameter_count(const ModelConfig& cfg);

// conv(k3, s1) -> SiLU -> conv(k3, s2) -> SiLU -> encoder blocks -> LayerNorm.
// Both convs pad by 1, so S = ceil(frames / 2).
EncoderOutput encoder_forward(const Tensor& mel_values, const Model& model);
EncoderOutput encoder_forward(const MelSpectrogram& mel, const Model& model);

// Runs `block` over concat(encoder features, hidden) and returns the rows
// belonging to the decoder positions. The block's own residual carries hidden.
Tensor cross_connection(const Tensor& hidden, const EncoderOutput& enc, const MambaBlockParams& block,
                        const MambaBlockConfig& cfg);

// Token + learned position embeddings -> per layer (self block, cross
// connection) -> LayerNorm -> vocabulary projection. Returns raw logits [T x V].
Tensor decoder_forward(std::span<const TokenId> tokens, const EncoderOutput& enc, const Model& model);

// Incremental decoder: feeds one token at a time, reusing the recurrent
// state of every block. Each step returns the logits at the new position.
class DecodeSession {
 public:
  DecodeSession(const Model& model, const EncoderOutput& enc);

  std::vector<double> step(TokenId token);
  std::size_t position() const { return position_; }

 private:
  const Model* model_;
  MambaBlockConfig block_cfg_;
  std::vector<MambaBlockState> self_states_;
  std::vector<MambaBlockState> cross_states_;
  std::size_t position_ = 0;
};

// Lowest index among maximal entries.
TokenId argmax_token(std::span<const double> logits);

// Starts from [SOT, TRANSCRIBE] and appends the argmax token until EOT or
// until the sequence holds max_len tokens. Returns only generated ids.
TokenSequence greedy_decode(const MelSpectrogram& mel, const Model& model, std::size_t max_len);
TokenSequence greedy_decode(const EncoderOutput& enc, const Model& model, std::size_t max_len);

}  // namespace ssm_asr

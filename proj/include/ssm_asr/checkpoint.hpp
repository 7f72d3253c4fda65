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

#include <cstdint>
#include <filesystem>

#include "ssm_asr/frontend.hpp"
#include "ssm_asr/model.hpp"
#include "ssm_asr/optim.hpp"

namespace ssm_asr {

// Binary layout, all little-endian:
//   "SMBA" u32 version
//   model config    11 x u32 (d_model, n_enc, n_dec, d_state, d_inner, conv_kernel,
//                   vocab_size, max_text_len, n_mels, use_skip, scan_mode)
//   train config    f64 lr0, wd, eps, beta1, beta2, clip_norm; u32 batch, epochs;
//                   u64 seed, total_steps
//   frontend config u32 sample_rate, win, hop, n_fft, n_mels; u64 target_samples; f64 log_floor
//   u64 step, u64 vocab_hash
//   u32 count, then per parameter: u32 name_len, name, u32 rank, u32 dims[rank], f32 values
//   u64 optimizer step, then per parameter: f32 m[numel], f32 v[numel]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
  Model model;
  TrainConfig train;
  FrontendConfig frontend;
  OptimizerState optimizer;
  std::uint64_t step = 0;
  std::uint64_t vocab_hash = 0;
};

// Writes to a temporary file and renames, so an existing checkpoint at
// `path` is never left half-written.
void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainConfig& train,
                     const FrontendConfig& frontend, const OptimizerState& optimizer,
                     std::uint64_t step, std::uint64_t vocab_hash);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssm_asr

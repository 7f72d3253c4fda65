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
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ssm_asr/bpe.hpp"
#include "ssm_asr/frontend.hpp"
#include "ssm_asr/model.hpp"
#include "ssm_asr/optim.hpp"

namespace ssm_asr {

struct Utterance {
  MelSpectrogram mel;
  TokenSequence tokens;  // wrapped: SOT TRANSCRIBE ... EOT
  std::string text;
};

// Featurizes and tokenizes every manifest entry. LengthError when a
// transcript does not fit in max_text_len tokens.
std::vector<Utterance> load_utterances(const std::filesystem::path& manifest_path, const Vocab& vocab,
                                       const FrontendConfig& frontend, std::size_t max_text_len);

// Token-mean teacher-forced cross-entropy pooled over the batch. Token
// sequences are padded with PAD to the batch maximum; PAD targets are ignored.
// When a tape is active each item is backpropagated on its own tape, with
// gradients accumulated in batch order.
double batch_loss(std::span<const Utterance* const> batch, const Model& model, bool backprop);

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  double lr = 0.0;
};

std::vector<Tensor> trainable_parameters(const Model& model);

StepResult train_step(std::span<const Utterance* const> batch, const Model& model, std::span<Tensor> params,
                      OptimizerState& state, const TrainConfig& cfg);

struct MetricsRow {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wer = 0.0;
  double lr = 0.0;
  double wall_time_s = 0.0;
};

inline constexpr const char* kMetricsHeader = "step,epoch,train_loss,val_loss,wer,lr,wall_time_s";
std::string format_metrics_row(const MetricsRow& row);

struct TrainLoopOptions {
  std::filesystem::path out_dir;  // metrics.csv, last.ckpt, best.ckpt; empty disables file output
  std::function<void(const MetricsRow&)> on_epoch;
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  double best_wer = 1.0;
  std::uint64_t steps = 0;
};

std::uint64_t steps_per_epoch(std::size_t n_train, std::size_t batch_size);

double validation_loss(const std::vector<Utterance>& data, const Model& model);
double corpus_wer(const std::vector<Utterance>& data, const Model& model, const Vocab& vocab);

// Trains `model` in place. DivergenceError aborts the run; checkpoints from
// completed epochs are left untouched.
TrainResult train_loop(const Model& model, const std::vector<Utterance>& train, const std::vector<Utterance>& val,
                       TrainConfig cfg, const FrontendConfig& frontend, const Vocab& vocab,
                       const TrainLoopOptions& options);

}  // namespace ssm_asr

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

#include "ssm_asr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "ssm_asr/checkpoint.hpp"
#include "ssm_asr/errors.hpp"
#include "ssm_asr/evaluate.hpp"
#include "ssm_asr/manifest.hpp"
#include "ssm_asr/ops.hpp"
#include "ssm_asr/wer.hpp"

namespace ssm_asr {

std::vector<Utterance> load_utterances(const std::filesystem::path& manifest_path, const Vocab& vocab,
                                       const FrontendConfig& frontend, std::size_t max_text_len) {
  std::vector<Utterance> out;
  for (const auto& entry : read_manifest(manifest_path)) {
    if (entry.text.empty()) throw ContractError("empty transcript for " + entry.audio);
    Utterance utt;
    utt.text = entry.text;
    utt.tokens = encode(entry.text, vocab, true);
    if (utt.tokens.size() > max_text_len) {
      throw LengthError(entry.audio + ": transcript needs " + std::to_string(utt.tokens.size()) +
                        " tokens, limit is " + std::to_string(max_text_len));
    }
    utt.mel = featurize_file(resolve_audio(manifest_path, entry), frontend);
    out.push_back(std::move(utt));
  }
  return out;
}

double batch_loss(std::span<const Utterance* const> batch, const Model& model, bool backprop) {
  if (batch.empty()) throw ContractError("batch must not be empty");
  const SpecialTokens sp = special_tokens(model.config().vocab_size);
  std::size_t max_len = 0;
  std::size_t total_targets = 0;
  for (const Utterance* u : batch) {
    if (u->tokens.size() < 2) throw ContractError("token sequence needs at least two tokens");
    if (u->tokens.size() > model.config().max_text_len) throw LengthError("token sequence exceeds max_text_len");
    max_len = std::max(max_len, u->tokens.size());
    total_targets += u->tokens.size() - 1;
  }

  double total = 0.0;
  for (const Utterance* u : batch) {
    TokenSequence padded = u->tokens;
    padded.resize(max_len, sp.pad);
    const std::span<const TokenId> inputs(padded.data(), max_len - 1);
    const std::span<const TokenId> targets(padded.data() + 1, max_len - 1);
    const double weight = static_cast<double>(u->tokens.size() - 1) / static_cast<double>(total_targets);

    if (backprop) {
      Tape tape;
      TapeScope scope(tape);
      const EncoderOutput enc = encoder_forward(u->mel, model);
      const Tensor logits = decoder_forward(inputs, enc, model);
      const Tensor loss = scale(softmax_cross_entropy(logits, targets, sp.pad), weight);
      total += loss.item();
      tape.backward(loss);
    } else {
      NoGradScope no_grad;
      const EncoderOutput enc = encoder_forward(u->mel, model);
      const Tensor logits = decoder_forward(inputs, enc, model);
      total += weight * softmax_cross_entropy(logits, targets, sp.pad).item();
    }
  }
  return total;
}

std::vector<Tensor> trainable_parameters(const Model& model) {
  std::vector<Tensor> params;
  for (const auto& [name, t] : model.named_parameters()) params.push_back(t);
  return params;
}

StepResult train_step(std::span<const Utterance* const> batch, const Model& model, std::span<Tensor> params,
                      OptimizerState& state, const TrainConfig& cfg) {
  for (Tensor& p : params) p.zero_grad();
  StepResult result;
  try {
    result.loss = batch_loss(batch, model, true);
  } catch (const NumericError& e) {
    throw DivergenceError("non-finite value at step " + std::to_string(state.step) + ": " + e.what());
  }
  if (!std::isfinite(result.loss)) {
    throw DivergenceError("non-finite loss at step " + std::to_string(state.step));
  }
  result.grad_norm = global_grad_norm(params);
  clip_grad_norm(params, cfg.clip_norm);
  result.lr = lr_schedule(state.step, cfg);
  adamw_step(params, state, result.lr, cfg);
  return result;
}

std::string format_metrics_row(const MetricsRow& row) {
  std::ostringstream out;
  out.precision(9);
  out << row.step << ',' << row.epoch << ',' << row.train_loss << ',' << row.val_loss << ',' << row.wer << ','
      << row.lr << ',';
  out.precision(3);
  out << std::fixed << row.wall_time_s;
  return out.str();
}

std::uint64_t steps_per_epoch(std::size_t n_train, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  return (n_train + batch_size - 1) / batch_size;
}

double validation_loss(const std::vector<Utterance>& data, const Model& model) {
  if (data.empty()) return 0.0;
  std::vector<const Utterance*> ptrs;
  for (const auto& u : data) ptrs.push_back(&u);
  return batch_loss(ptrs, model, false);
}

double corpus_wer(const std::vector<Utterance>& data, const Model& model, const Vocab& vocab) {
  std::size_t edits = 0, words = 0;
  for (const auto& u : data) {
    const WerCounts c = wer_counts(u.text, transcribe(u.mel, model, vocab));
    edits += c.edits;
    words += c.ref_words;
  }
  return static_cast<double>(edits) / static_cast<double>(std::max<std::size_t>(1, words));
}

TrainResult train_loop(const Model& model, const std::vector<Utterance>& train, const std::vector<Utterance>& val,
                       TrainConfig cfg, const FrontendConfig& frontend, const Vocab& vocab,
                       const TrainLoopOptions& options) {
  if (train.empty()) throw ContractError("training set is empty");
  check_vocab(model, vocab);
  const std::uint64_t per_epoch = steps_per_epoch(train.size(), cfg.batch_size);
  cfg.total_steps = per_epoch * cfg.epochs;
  cfg.validate();

  std::vector<Tensor> params = trainable_parameters(model);
  OptimizerState state = OptimizerState::for_params(params);
  const std::uint64_t vocab_hash = vocab.hash();

  const bool write_files = !options.out_dir.empty();
  std::ofstream metrics_out;
  if (write_files) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
    const auto metrics_path = options.out_dir / "metrics.csv";
    metrics_out.open(metrics_path, std::ios::binary | std::ios::trunc);
    if (!metrics_out) throw IoError("cannot open " + metrics_path.string() + " for writing");
    metrics_out << kMetricsHeader << '\n' << std::flush;
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  double best_val_loss = std::numeric_limits<double>::infinity();
  result.best_wer = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double last_lr = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<const Utterance*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch_size); ++i) batch.push_back(&train[order[i]]);
      const StepResult step = train_step(batch, model, params, state, cfg);
      loss_sum += step.loss;
      last_lr = step.lr;
    }

    MetricsRow row;
    row.step = state.step;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(per_epoch);
    row.val_loss = validation_loss(val, model);
    row.wer = val.empty() ? corpus_wer(train, model, vocab) : corpus_wer(val, model, vocab);
    row.lr = last_lr;
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.push_back(row);

    const bool improved = row.wer < result.best_wer || (row.wer == result.best_wer && row.val_loss < best_val_loss);
    if (improved) {
      result.best_wer = row.wer;
      best_val_loss = row.val_loss;
    }
    if (write_files) {
      metrics_out << format_metrics_row(row) << '\n' << std::flush;
      if (!metrics_out) throw IoError("failed writing metrics.csv in " + options.out_dir.string());
      save_checkpoint(options.out_dir / "last.ckpt", model, cfg, frontend, state, state.step, vocab_hash);
      if (improved) save_checkpoint(options.out_dir / "best.ckpt", model, cfg, frontend, state, state.step, vocab_hash);
    }
    if (options.on_epoch) options.on_epoch(row);
  }
  result.steps = state.step;
  return result;
}

}  // namespace ssm_asr

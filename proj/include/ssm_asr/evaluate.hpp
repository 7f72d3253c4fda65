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
#include <filesystem>
#include <string>
#include <vector>

#include "ssm_asr/bpe.hpp"
#include "ssm_asr/checkpoint.hpp"
#include "ssm_asr/frontend.hpp"
#include "ssm_asr/manifest.hpp"
#include "ssm_asr/model.hpp"

namespace ssm_asr {

// Throws VocabError when the vocabulary does not belong to the model/checkpoint.
void check_vocab(const Model& model, const Vocab& vocab);
void check_vocab(const LoadedCheckpoint& ckpt, const Vocab& vocab);

std::string transcribe(const MelSpectrogram& mel, const Model& model, const Vocab& vocab);
std::string transcribe(const Waveform& wave, const Model& model, const Vocab& vocab, const FrontendConfig& frontend);

struct EvalRow {
  std::string audio;
  std::string ref;
  std::string hyp;
  double wer = 0.0;
  std::size_t edits = 0;
  std::size_t ref_words = 0;
};

struct EvalReport {
  double corpus_wer = 0.0;  // pooled: total edits / total reference words
  std::size_t edits = 0;
  std::size_t ref_words = 0;
  std::vector<EvalRow> rows;         // manifest order
  std::vector<std::string> skipped;  // entries whose audio could not be found
};

double pooled_wer(const std::vector<EvalRow>& rows);

EvalReport evaluate(const std::vector<ManifestEntry>& entries, const std::filesystem::path& manifest_path,
                    const Model& model, const Vocab& vocab, const FrontendConfig& frontend);

EvalReport evaluate(const std::filesystem::path& manifest_path, const LoadedCheckpoint& ckpt, const Vocab& vocab);

std::string format_report_csv(const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace ssm_asr

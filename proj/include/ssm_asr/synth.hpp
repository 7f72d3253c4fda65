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

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ssm_asr/manifest.hpp"
#include "ssm_asr/wav.hpp"

namespace ssm_asr {

// Synthetic "spoken digits": each digit word is a pure tone, digits are
// separated by silence. Deterministic for a fixed seed.
struct SynthSpec {
  std::size_t n_utterances = 32;
  std::uint64_t seed = 0;
  std::size_t min_digits = 1;
  std::size_t max_digits = 3;
  double tone_ms = 100.0;
  double gap_ms = 50.0;
  double noise_amplitude = 0.0;  // standard deviation of additive Gaussian noise
  double tone_amplitude = 0.5;
  int sample_rate = 16000;

  void validate() const;
};

const std::array<std::string_view, 10>& digit_words();

// 400 Hz for "zero" rising by 150 Hz per digit to 1750 Hz for "nine".
double tone_frequency(std::size_t digit);

std::string digits_transcript(const std::vector<int>& digits);

Waveform synth_utterance(const std::vector<int>& digits, const SynthSpec& spec, std::mt19937_64& noise_rng);

struct SynthCorpus {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> val;
  std::vector<ManifestEntry> test;
};

// Writes out_dir/wav/uttNNNN.wav (PCM16) and train/val/test .jsonl manifests,
// split 80/10/10 by a seeded shuffle.
SynthCorpus synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace ssm_asr

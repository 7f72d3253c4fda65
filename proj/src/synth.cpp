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

#include "ssm_asr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

void SynthSpec::validate() const {
  if (n_utterances == 0) throw ConfigError("synth: n_utterances must be positive");
  if (min_digits == 0 || min_digits > max_digits) throw ConfigError("synth: invalid digit range");
  if (!(tone_ms > 0.0) || gap_ms < 0.0) throw ConfigError("synth: invalid tone/gap durations");
  if (noise_amplitude < 0.0) throw ConfigError("synth: noise_amplitude must be non-negative");
  if (tone_frequency(9) >= sample_rate / 2.0) throw ConfigError("synth: tones exceed Nyquist");
}

const std::array<std::string_view, 10>& digit_words() {
  static constexpr std::array<std::string_view, 10> kWords = {
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
  return kWords;
}

double tone_frequency(std::size_t digit) { return 400.0 + 150.0 * static_cast<double>(digit); }

std::string digits_transcript(const std::vector<int>& digits) {
  std::string text;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) text += ' ';
    text += digit_words().at(static_cast<std::size_t>(digits[i]));
  }
  return text;
}

Waveform synth_utterance(const std::vector<int>& digits, const SynthSpec& spec, std::mt19937_64& noise_rng) {
  const auto tone_len = static_cast<std::size_t>(std::llround(spec.tone_ms * spec.sample_rate / 1000.0));
  const auto gap_len = static_cast<std::size_t>(std::llround(spec.gap_ms * spec.sample_rate / 1000.0));
  Waveform wave;
  wave.sample_rate = spec.sample_rate;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) wave.samples.insert(wave.samples.end(), gap_len, 0.0);
    const double f = tone_frequency(static_cast<std::size_t>(digits[i]));
    for (std::size_t n = 0; n < tone_len; ++n) {
      wave.samples.push_back(spec.tone_amplitude *
                             std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / spec.sample_rate));
    }
  }
  if (spec.noise_amplitude > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_amplitude);
    for (double& s : wave.samples) s += noise(noise_rng);
  }
  return wave;
}

SynthCorpus synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  std::mt19937_64 rng(spec.seed);
  std::mt19937_64 noise_rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
  std::uniform_int_distribution<std::size_t> count_dist(spec.min_digits, spec.max_digits);
  std::uniform_int_distribution<int> digit_dist(0, 9);

  std::vector<ManifestEntry> all;
  for (std::size_t u = 0; u < spec.n_utterances; ++u) {
    std::vector<int> digits(count_dist(rng));
    for (int& d : digits) d = digit_dist(rng);
    char name[32];
    std::snprintf(name, sizeof name, "wav/utt%04zu.wav", u);
    write_wav_pcm16(out_dir / name, synth_utterance(digits, spec, noise_rng));
    all.push_back({name, digits_transcript(digits)});
  }

  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(all.size())));
  const auto n_val = std::min(all.size() - n_train,
                              static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(all.size()))));

  SynthCorpus corpus;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& split = i < n_train ? corpus.train : (i < n_train + n_val ? corpus.val : corpus.test);
    split.push_back(all[order[i]]);
  }
  write_manifest(out_dir / "train.jsonl", corpus.train);
  write_manifest(out_dir / "val.jsonl", corpus.val);
  write_manifest(out_dir / "test.jsonl", corpus.test);
  return corpus;
}

}  // namespace ssm_asr

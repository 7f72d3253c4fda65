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
#include <span>
#include <vector>

namespace ssm_asr {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

// RIFF/WAVE with PCM16 or IEEE float32 samples, one or two channels.
// Channels are averaged to mono; PCM16 is scaled by 1/32768.
// Throws IngestError with a kind describing the failure.
Waveform parse_wav(std::span<const std::uint8_t> bytes);
Waveform load_wav(const std::filesystem::path& path);

// Mono PCM16; samples are clamped to [-1, 1] and scaled by 32767.
std::vector<std::uint8_t> encode_wav_pcm16(const Waveform& wave);
void write_wav_pcm16(const std::filesystem::path& path, const Waveform& wave);

}  // namespace ssm_asr

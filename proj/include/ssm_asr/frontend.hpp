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

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ssm_asr/tensor.hpp"
#include "ssm_asr/wav.hpp"

namespace ssm_asr {

struct FrontendConfig {
  int sample_rate = 16000;
  std::size_t win_samples = 400;   // 25 ms
  std::size_t hop_samples = 160;   // 10 ms
  std::size_t n_fft = 400;
  std::size_t n_mels = 80;
  std::size_t target_samples = 160000;  // 10 s
  double log_floor = 1e-10;

  // Throws ConfigError unless win <= n_fft, hop <= win and all are positive.
  void validate() const;
};

struct MelSpectrogram {
  Tensor values;  // [frames x n_mels]
  std::size_t n_mels = 0;
  std::size_t hop_samples = 0;
  std::size_t win_samples = 0;

  std::size_t frames() const { return values.defined() ? values.dim(0) : 0; }
};

// Windowed-sinc (Kaiser) band-limited resampling with 16 taps per side at
// the lower rate. Output length is round(len * target / source).
Waveform resample(const Waveform& wave, int target_rate);

// Scales so that max |sample| == 1; all-zero input is returned unchanged.
Waveform normalize(const Waveform& wave);

// Keeps the first target_samples samples or zero-pads at the end.
Waveform pad_or_trim(const Waveform& wave, std::size_t target_samples);

std::size_t frame_count(std::size_t n_samples, std::size_t win_samples, std::size_t hop_samples);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// Mixed-radix Cooley-Tukey DFT for any length (prime factors fall back to a
// direct sum). Forward transform, no scaling.
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> input);

// |X_k|^2 for k = 0..n_fft/2 of the frame zero-padded to n_fft.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

// Center frequency (Hz) of each triangular filter.
std::vector<double> mel_center_frequencies(const FrontendConfig& cfg);

// Triangular HTK-scale filters spanning 0 .. sample_rate/2, laid out
// [n_mels x (n_fft/2 + 1)].
std::vector<double> mel_filterbank(const FrontendConfig& cfg);

// Hann STFT power -> Mel filterbank -> log10(max(p, floor)) -> per-utterance
// standardization. Expects wave at cfg.sample_rate with cfg.target_samples samples.
MelSpectrogram log_mel(const Waveform& wave, const FrontendConfig& cfg);

// resample -> normalize -> pad_or_trim -> log_mel.
MelSpectrogram featurize(const Waveform& wave, const FrontendConfig& cfg);
MelSpectrogram featurize_file(const std::filesystem::path& path, const FrontendConfig& cfg);

}  // namespace ssm_asr

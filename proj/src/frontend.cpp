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

#include "ssm_asr/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

namespace {

constexpr int kTapsPerSide = 16;
constexpr double kKaiserBeta = 8.0;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double r) {
  if (std::abs(r) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

std::size_t smallest_factor(std::size_t n) {
  for (std::size_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return p;
  }
  return n;
}

}  // namespace

void FrontendConfig::validate() const {
  if (sample_rate <= 0 || win_samples == 0 || hop_samples == 0 || n_fft == 0 || n_mels == 0 ||
      target_samples == 0 || !(log_floor > 0.0)) {
    throw ConfigError("frontend config values must be positive");
  }
  if (win_samples > n_fft) throw ConfigError("win_samples must not exceed n_fft");
  if (hop_samples > win_samples) throw ConfigError("hop_samples must not exceed win_samples");
  if (target_samples < win_samples) throw ConfigError("target_samples shorter than one window");
}

Waveform resample(const Waveform& wave, int target_rate) {
  if (wave.sample_rate < 8000 || wave.sample_rate > 48000) {
    throw ContractError("resample: source rate " + std::to_string(wave.sample_rate) +
                        " outside [8000, 48000]");
  }
  if (target_rate <= 0) throw ContractError("resample: target rate must be positive");
  if (wave.sample_rate == target_rate) return wave;

  const double ratio = static_cast<double>(target_rate) / wave.sample_rate;
  const double cutoff = std::min(1.0, ratio);
  const double half_width = kTapsPerSide / cutoff;
  const auto in_len = static_cast<std::ptrdiff_t>(wave.samples.size());
  const auto out_len = static_cast<std::size_t>(std::llround(wave.samples.size() * ratio));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(t + half_width));
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double dx = t - static_cast<double>(i);
      const double w = cutoff * sinc(cutoff * dx) * kaiser(dx / half_width);
      norm += w;
      if (i >= 0 && i < in_len) acc += w * wave.samples[static_cast<std::size_t>(i)];
    }
    out.samples[j] = norm != 0.0 ? acc / norm : 0.0;
  }
  return out;
}

Waveform normalize(const Waveform& wave) {
  double peak = 0.0;
  for (double s : wave.samples) peak = std::max(peak, std::abs(s));
  Waveform out = wave;
  if (peak == 0.0) return out;
  for (double& s : out.samples) s /= peak;
  return out;
}

Waveform pad_or_trim(const Waveform& wave, std::size_t target_samples) {
  if (target_samples < 1) throw ContractError("pad_or_trim: target_samples must be >= 1");
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.assign(target_samples, 0.0);
  std::copy_n(wave.samples.begin(), std::min(target_samples, wave.samples.size()), out.samples.begin());
  return out;
}

std::size_t frame_count(std::size_t n_samples, std::size_t win_samples, std::size_t hop_samples) {
  if (n_samples < win_samples) return 0;
  return 1 + (n_samples - win_samples) / hop_samples;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> input) {
  const std::size_t n = input.size();
  if (n <= 1) return {input.begin(), input.end()};
  const std::size_t p = smallest_factor(n);
  std::vector<std::complex<double>> out(n);
  if (p == n) {
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / n;
        acc += input[j] * std::polar(1.0, angle);
      }
      out[k] = acc;
    }
    return out;
  }
  // Decimation in time: p interleaved sub-transforms of length m.
  const std::size_t m = n / p;
  std::vector<std::vector<std::complex<double>>> parts(p);
  std::vector<std::complex<double>> sub(m);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t j = 0; j < m; ++j) sub[j] = input[j * p + r];
    parts[r] = fft(sub);
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = parts[0][k % m];
    for (std::size_t r = 1; r < p; ++r) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((r * k) % n) / n;
      acc += std::polar(1.0, angle) * parts[r][k % m];
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  if (frame.size() > n_fft) throw ShapeError("power_spectrum: frame longer than n_fft");
  std::vector<std::complex<double>> buf(n_fft, 0.0);
  std::copy(frame.begin(), frame.end(), buf.begin());
  const auto spec = fft(buf);
  std::vector<double> power(n_fft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
  return power;
}

std::vector<double> mel_center_frequencies(const FrontendConfig& cfg) {
  const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> centers(cfg.n_mels);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    centers[m] = mel_to_hz(mel_max * static_cast<double>(m + 1) / static_cast<double>(cfg.n_mels + 1));
  }
  return centers;
}

std::vector<double> mel_filterbank(const FrontendConfig& cfg) {
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  std::vector<double> bank(cfg.n_mels * bins, 0.0);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.n_fft);
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      bank[m * bins + k] = std::max(0.0, std::min(rise, fall));
    }
  }
  return bank;
}

MelSpectrogram log_mel(const Waveform& wave, const FrontendConfig& cfg) {
  cfg.validate();
  if (wave.sample_rate != cfg.sample_rate) {
    throw ContractError("log_mel: waveform at " + std::to_string(wave.sample_rate) + " Hz, expected " +
                        std::to_string(cfg.sample_rate));
  }
  if (wave.samples.size() != cfg.target_samples) {
    throw ContractError("log_mel: waveform has " + std::to_string(wave.samples.size()) +
                        " samples, expected " + std::to_string(cfg.target_samples));
  }
  const std::size_t frames = frame_count(wave.samples.size(), cfg.win_samples, cfg.hop_samples);
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const auto window = hann_window(cfg.win_samples);
  const auto bank = mel_filterbank(cfg);

  std::vector<double> values(frames * cfg.n_mels);
  std::vector<double> frame(cfg.win_samples);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* src = wave.samples.data() + f * cfg.hop_samples;
    for (std::size_t i = 0; i < cfg.win_samples; ++i) frame[i] = src[i] * window[i];
    const auto power = power_spectrum(frame, cfg.n_fft);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < bins; ++k) energy += bank[m * bins + k] * power[k];
      values[f * cfg.n_mels + m] = std::log10(std::max(energy, cfg.log_floor));
    }
  }

  double mu = 0.0;
  for (double v : values) mu += v;
  mu /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mu) * (v - mu);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  const bool flat = sd <= 1e-12 * std::max(1.0, std::abs(mu));
  for (double& v : values) v = flat ? 0.0 : (v - mu) / sd;

  MelSpectrogram mel;
  mel.values = Tensor::from({frames, cfg.n_mels}, std::move(values));
  mel.n_mels = cfg.n_mels;
  mel.hop_samples = cfg.hop_samples;
  mel.win_samples = cfg.win_samples;
  return mel;
}

MelSpectrogram featurize(const Waveform& wave, const FrontendConfig& cfg) {
  return log_mel(pad_or_trim(normalize(resample(wave, cfg.sample_rate)), cfg.target_samples), cfg);
}

MelSpectrogram featurize_file(const std::filesystem::path& path, const FrontendConfig& cfg) {
  return featurize(load_wav(path), cfg);
}

}  // namespace ssm_asr

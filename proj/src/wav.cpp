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

#include "ssm_asr/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

[[noreturn]] void fail(IngestErrorKind kind, const std::string& msg) {
  throw IngestError(kind, "wav: " + msg);
}

}  // namespace

Waveform parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(IngestErrorKind::kMalformedHeader, "missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) fail(IngestErrorKind::kMalformedHeader, "short fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) fail(IngestErrorKind::kMalformedHeader, "short extensible fmt chunk");
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) fail(IngestErrorKind::kMalformedHeader, "data chunk precedes fmt chunk");
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) {
        fail(IngestErrorKind::kUnsupportedCodec,
             "unsupported codec (format " + std::to_string(format) + ", " + std::to_string(bits) + " bits)");
      }
      if (channels < 1 || channels > 2) {
        fail(IngestErrorKind::kUnsupportedCodec, std::to_string(channels) + " channels");
      }
      if (rate == 0) fail(IngestErrorKind::kMalformedHeader, "zero sample rate");
      const std::size_t sample_bytes = bits / 8;
      if (block_align != channels * sample_bytes) {
        fail(IngestErrorKind::kMalformedHeader, "inconsistent block alignment");
      }
      if (body + size > bytes.size()) {
        fail(IngestErrorKind::kTruncatedData, "data chunk declares " + std::to_string(size) +
                                                  " bytes, only " +
                                                  std::to_string(bytes.size() - body) + " present");
      }
      if (size % block_align != 0) fail(IngestErrorKind::kTruncatedData, "partial sample frame");

      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      const std::size_t frames = size / block_align;
      wave.samples.resize(frames);
      const std::uint8_t* d = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::uint8_t* s = d + i * block_align + c * sample_bytes;
          if (pcm16) {
            acc += static_cast<double>(static_cast<std::int16_t>(read_u16(s))) / 32768.0;
          } else {
            const std::uint32_t raw = read_u32(s);
            float v;
            std::memcpy(&v, &raw, sizeof v);
            acc += static_cast<double>(v);
          }
        }
        wave.samples[i] = acc / channels;
      }
      return wave;
    }
    pos = body + size + (size & 1);
  }
  fail(have_fmt ? IngestErrorKind::kTruncatedData : IngestErrorKind::kMalformedHeader,
       have_fmt ? "no data chunk" : "no fmt chunk");
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(IngestErrorKind::kIo, "wav: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const IngestError& e) {
    throw IngestError(e.kind(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(const Waveform& wave) {
  const std::uint32_t data_size = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (double s : wave.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clamped * 32767.0))));
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path, const Waveform& wave) {
  const auto bytes = encode_wav_pcm16(wave);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace ssm_asr

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

#include "ssm_asr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError("checkpoint truncated: " + origin_);
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::vector<char> data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainConfig& train,
                     const FrontendConfig& frontend, const OptimizerState& optimizer,
                     std::uint64_t step, std::uint64_t vocab_hash) {
  const ModelConfig& mc = model.config();
  Writer w;
  w.bytes("SMBA");
  w.u32(kCheckpointVersion);
  for (std::size_t v : {mc.d_model, mc.n_encoder_layers, mc.n_decoder_layers, mc.d_state, mc.d_inner,
                        mc.conv_kernel, mc.vocab_size, mc.max_text_len, mc.n_mels}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(mc.use_skip ? 1 : 0);
  w.u32(mc.scan_mode == ScanMode::kParallel ? 1 : 0);

  for (double v : {train.lr0, train.weight_decay, train.adam_eps, train.beta1, train.beta2, train.clip_norm}) {
    w.f64(v);
  }
  w.u32(static_cast<std::uint32_t>(train.batch_size));
  w.u32(static_cast<std::uint32_t>(train.epochs));
  w.u64(train.seed);
  w.u64(train.total_steps);

  w.u32(static_cast<std::uint32_t>(frontend.sample_rate));
  w.u32(static_cast<std::uint32_t>(frontend.win_samples));
  w.u32(static_cast<std::uint32_t>(frontend.hop_samples));
  w.u32(static_cast<std::uint32_t>(frontend.n_fft));
  w.u32(static_cast<std::uint32_t>(frontend.n_mels));
  w.u64(frontend.target_samples);
  w.f64(frontend.log_floor);

  w.u64(step);
  w.u64(vocab_hash);

  const auto named = model.named_parameters();
  w.u32(static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f32(static_cast<float>(v));
  }

  const bool have_moments = optimizer.m.size() == named.size();
  w.u64(optimizer.step);
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::size_t n = named[i].second.numel();
    for (std::size_t j = 0; j < n; ++j) w.f32(have_moments ? static_cast<float>(optimizer.m[i][j]) : 0.0f);
    for (std::size_t j = 0; j < n; ++j) w.f32(have_moments ? static_cast<float>(optimizer.v[i][j]) : 0.0f);
  }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw IoError("short write to checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()),
           path.string());
  if (r.bytes(4) != "SMBA") throw IoError("not a checkpoint (bad magic): " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  }

  ModelConfig mc;
  mc.d_model = r.u32();
  mc.n_encoder_layers = r.u32();
  mc.n_decoder_layers = r.u32();
  mc.d_state = r.u32();
  mc.d_inner = r.u32();
  mc.conv_kernel = r.u32();
  mc.vocab_size = r.u32();
  mc.max_text_len = r.u32();
  mc.n_mels = r.u32();
  mc.use_skip = r.u32() != 0;
  mc.scan_mode = r.u32() != 0 ? ScanMode::kParallel : ScanMode::kSequential;

  TrainConfig tc;
  tc.lr0 = r.f64();
  tc.weight_decay = r.f64();
  tc.adam_eps = r.f64();
  tc.beta1 = r.f64();
  tc.beta2 = r.f64();
  tc.clip_norm = r.f64();
  tc.batch_size = r.u32();
  tc.epochs = r.u32();
  tc.seed = r.u64();
  tc.total_steps = r.u64();

  FrontendConfig fc;
  fc.sample_rate = static_cast<int>(r.u32());
  fc.win_samples = r.u32();
  fc.hop_samples = r.u32();
  fc.n_fft = r.u32();
  fc.n_mels = r.u32();
  fc.target_samples = r.u64();
  fc.log_floor = r.f64();

  const std::uint64_t step = r.u64();
  const std::uint64_t vocab_hash = r.u64();

  Model model(mc, 0);
  auto named = model.named_parameters();
  std::map<std::string, Tensor> by_name(named.begin(), named.end());
  const std::uint32_t count = r.u32();
  if (count != named.size()) {
    throw IoError("checkpoint holds " + std::to_string(count) + " parameters, model expects " +
                  std::to_string(named.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u32());
    if (name != named[i].first) throw IoError("unexpected parameter '" + name + "' in checkpoint");
    Tensor t = by_name.at(name);
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != t.shape()) {
      throw IoError("parameter '" + name + "' has shape " + shape_str(shape) + ", expected " +
                    shape_str(t.shape()));
    }
    for (double& v : t.mutable_data()) v = static_cast<double>(r.f32());
  }

  std::vector<Tensor> params;
  for (const auto& nt : named) params.push_back(nt.second);
  OptimizerState opt = OptimizerState::for_params(params);
  opt.step = r.u64();
  for (std::size_t i = 0; i < named.size(); ++i) {
    for (double& v : opt.m[i]) v = static_cast<double>(r.f32());
    for (double& v : opt.v[i]) v = static_cast<double>(r.f32());
  }
  if (!r.done()) throw IoError("trailing bytes in checkpoint " + path.string());
  return {std::move(model), tc, fc, std::move(opt), step, vocab_hash};
}

}  // namespace ssm_asr

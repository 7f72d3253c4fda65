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
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssm_asr/scan.hpp"
#include "ssm_asr/tensor.hpp"

namespace ssm_asr {

struct MambaBlockConfig {
  std::size_t d_model = 64;
  std::size_t d_inner = 128;
  std::size_t d_state = 16;
  std::size_t conv_kernel = 4;
  // Direct feedthrough term; false gives the plain y_t = C_t h_t readout.
  bool use_skip = true;
  ScanMode scan_mode = ScanMode::kParallel;
  double norm_eps = 1e-5;
};

// Selective SSM parameters over d_inner channels with d_state states each.
struct SsmParams {
  Tensor a_log;       // [Di x N]; A = -exp(a_log)
  Tensor b_proj;      // [Di x N]
  Tensor c_proj;      // [Di x N]
  Tensor delta_proj;  // [Di x Di]
  Tensor delta_bias;  // [Di]
  Tensor d_skip;      // [Di]
};

struct MambaBlockParams {
  Tensor norm_gain;    // [D]
  Tensor norm_bias;    // [D]
  Tensor in_proj;      // [D x 2Di], columns [0, Di) feed the scan, [Di, 2Di) the gate
  Tensor conv_kernel;  // [K x Di]
  Tensor conv_bias;    // [Di]
  SsmParams ssm;
  Tensor out_proj;  // [Di x D]
};

using NamedTensor = std::pair<std::string, Tensor>;

// Linear maps ~ U(+-1/sqrt(fan_in)); out_proj is zero so the block starts as
// the identity. a_log[d, n] = log(n + 1). delta_bias is the inverse softplus
// of a step drawn log-uniformly from [1e-3, 1e-1].
MambaBlockParams init_mamba_block(const MambaBlockConfig& cfg, std::mt19937_64& rng);

void append_named(const MambaBlockParams& p, const std::string& prefix, std::vector<NamedTensor>& out);

std::size_t mamba_block_param_count(const MambaBlockConfig& cfg);

// x [T x D] -> [T x D]:
// LayerNorm -> in_proj to (u, z) -> causal depthwise conv on u -> SiLU ->
// selective scan -> * SiLU(z) -> out_proj -> + x
Tensor mamba_block(const Tensor& x, const MambaBlockParams& p, const MambaBlockConfig& cfg);

// Recurrent form of mamba_block for one position at a time. Holds the conv
// window and the scan state; feeding a sequence step by step reproduces the
// rows of mamba_block over that sequence.
class MambaBlockState {
 public:
  explicit MambaBlockState(const MambaBlockConfig& cfg);

  std::vector<double> step(std::span<const double> x, const MambaBlockParams& p,
                           const MambaBlockConfig& cfg);

 private:
  std::vector<double> window_;  // last K-1 pre-conv inputs, oldest first
  std::vector<double> state_;   // [Di x N]
};

}  // namespace ssm_asr

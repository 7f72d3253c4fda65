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
#include <span>
#include <vector>

#include "ssm_asr/tensor.hpp"

namespace ssm_asr {

struct TrainConfig {
  double lr0 = 1e-4;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  // Derived from epochs and dataset size by the training loop.
  std::uint64_t total_steps = 0;

  void validate() const;
};

struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static OptimizerState for_params(std::span<const Tensor> params);
};

// lr0 * (1 - step / total_steps), no warmup.
double lr_schedule(std::uint64_t step, const TrainConfig& cfg);

// L2 norm over every gradient of every tensor.
double global_grad_norm(std::span<const Tensor> params);

// Scales all gradients by max_norm / norm when the global norm exceeds
// max_norm. Returns the factor applied (1 when unchanged). Throws
// DivergenceError on a non-finite gradient.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

// Decoupled weight decay with bias-corrected moments:
//   w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + wd * w)
void adamw_step(std::span<Tensor> params, OptimizerState& state, double lr, const TrainConfig& cfg);

}  // namespace ssm_asr

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
#include <span>

#include "ssm_asr/tensor.hpp"

namespace ssm_asr {

// One step of the linear recurrence h_t = a * h_{t-1} + b, per state channel.
struct ScanElement {
  double a = 1.0;
  double b = 0.0;
};

// Applies `first`, then `second`: (a1, b1) o (a2, b2) = (a2 * a1, a2 * b1 + b2).
constexpr ScanElement compose(const ScanElement& first, const ScanElement& second) {
  return {second.a * first.a, second.a * first.b + second.b};
}

enum class ScanMode { kSequential, kParallel };

struct Discretized {
  Tensor a_bar;  // [T x D x N], exp(delta * A)
  Tensor b_bar;  // [T x D x N], delta * B
};

// Zero-order hold on the diagonal state matrix with a simplified Euler drive.
// delta [T x D] (strictly positive), A [D x N], B [T x N].
Discretized discretize(const Tensor& delta, const Tensor& A, const Tensor& B);

// Reference recurrence with h_0 = 0:
//   h_t = a_bar_t * h_{t-1} + b_bar_x_t
//   y_t[d] = sum_n C_t[n] h_t[d, n] + d_skip[d] * x_t[d]
// a_bar, b_bar_x: [T x D x N]; C: [T x N]; x: [T x D]; d_skip: [D].
Tensor scan_sequential(const Tensor& a_bar, const Tensor& b_bar_x, const Tensor& C,
                       const Tensor& x, const Tensor& d_skip);

// Same contract as scan_sequential, evaluated with a work-efficient
// up-sweep/down-sweep associative scan over ScanElement.
Tensor scan_parallel(const Tensor& a_bar, const Tensor& b_bar_x, const Tensor& C,
                     const Tensor& x, const Tensor& d_skip);

// State kernels over `channels` independent recurrences laid out [steps x channels].
// `h` receives every state h_1..h_T.
void scan_states_sequential(std::span<const double> a, std::span<const double> b,
                            std::size_t steps, std::size_t channels, std::span<double> h);
void scan_states_parallel(std::span<const double> a, std::span<const double> b,
                          std::size_t steps, std::size_t channels, std::span<double> h);

// Differentiable selective scan. Discretizes on the fly from
// u [T x D], delta [T x D], A [D x N], B [T x N], C [T x N], d_skip [D] and
// returns y [T x D]. The backward pass keeps states only every ceil(sqrt(T))
// steps and recomputes each segment from its checkpoint.
Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& B,
                      const Tensor& C, const Tensor& d_skip, ScanMode mode);

// g_t = sigmoid(x_t W + bias), h_t = (1 - g_t) h_{t-1} + g_t x_t, h_0 = 0.
// x [T x D], weight [D x D], bias [D]. Returns h [T x D].
Tensor gated_recurrence(const Tensor& x, const Tensor& weight, const Tensor& bias);

}  // namespace ssm_asr

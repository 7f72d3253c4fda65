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
#include <vector>

#include "ssm_asr/tensor.hpp"

// Differentiable tensor operations. Every op records a backward closure on
// the thread's active tape when at least one input requires a gradient.
//
// Binary ops broadcast by stretching singleton axes. Operands of equal rank
// broadcast axis-by-axis; an operand one rank lower is treated as having a
// leading axis of extent 1. No other rank promotion is performed.

namespace ssm_asr {

enum class ElementwiseOp { kAdd, kSub, kMul, kExp, kSigmoid, kSilu, kSoftplus };

// Unary ops ignore `b`; binary ops require it.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b = Tensor());

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor exp(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);

// [m x k] @ [k x n], [B x m x k] @ [B x k x n], or [B x m x k] @ [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

// x[T x C_in] cross-correlated with kernel[K x C_in x C_out].
Tensor conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride, std::size_t padding);

// Per-channel causal convolution: out[t, c] = sum_k kernel[k, c] * x[t - K + 1 + k, c],
// with zeros before the start of the sequence.
Tensor depthwise_causal_conv1d(const Tensor& x, const Tensor& kernel);

// Normalizes over the last axis, then applies gain and bias of shape [D].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// Mean negative log-likelihood over positions whose target != ignore_id.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_id);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Row range [begin, end) of a matrix.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
// Column range [begin, end) of a matrix.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
// Stacks two matrices with equal column count along the row axis.
Tensor concat_rows(const Tensor& top, const Tensor& bottom);

// Gathers rows of table[V x D].
Tensor embedding(const Tensor& table, std::span<const int> ids);

// Plain numeric helpers used by non-differentiable paths.
double sigmoid_scalar(double x);
double softplus_scalar(double x);

}  // namespace ssm_asr

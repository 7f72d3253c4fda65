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

#include <functional>
#include <vector>

#include "ssm_asr/tensor.hpp"

namespace ssm_asr {

// Maximum over coordinates of |analytic - central difference| / max(1, |central difference|)
// for a scalar-valued f evaluated at x. eps must lie in [1e-7, 1e-3].
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps);

// Same measure over every coordinate of every tensor in `params`, which f
// reads through captured handles. Parameter values are perturbed in place
// and restored before returning.
double grad_check_params(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps);

}  // namespace ssm_asr

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

#include "ssm_asr/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

namespace {

void check_eps(double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw ContractError("grad_check eps must lie in [1e-7, 1e-3]");
}

double eval_scalar(const std::function<Tensor()>& f) {
  NoGradScope no_grad;
  const Tensor y = f();
  if (y.numel() != 1) throw ContractError("grad_check requires a scalar-valued function");
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  Tensor probe = x.detach();
  probe.set_requires_grad(true);
  return grad_check_params([&]() { return f(probe); }, {probe}, eps);
}

double grad_check_params(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps) {
  check_eps(eps);
  for (Tensor& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    const Tensor y = f();
    if (y.numel() != 1) throw ContractError("grad_check requires a scalar-valued function");
    tape.backward(y);
    for (const Tensor& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());
  }

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = eval_scalar(f);
      values[i] = saved - eps;
      const double down = eval_scalar(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      if (!std::isfinite(analytic[pi][i])) throw NumericError("grad_check: non-finite gradient");
      worst = std::max(worst, relative_error(analytic[pi][i], numeric));
    }
  }
  for (Tensor& p : params) p.zero_grad();
  return worst;
}

}  // namespace ssm_asr

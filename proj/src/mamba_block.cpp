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

#include "ssm_asr/mamba_block.hpp"

#include <cmath>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/ops.hpp"

namespace ssm_asr {

namespace {

Tensor uniform_param(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

// out[j] = sum_i x[i] * w[i, j] over a row-major [in x out] matrix.
void vec_mat(std::span<const double> x, const Tensor& w, std::size_t cols, double* out) {
  const auto wd = w.data();
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double* row = wd.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += xi * row[j];
  }
}

}  // namespace

MambaBlockParams init_mamba_block(const MambaBlockConfig& cfg, std::mt19937_64& rng) {
  const std::size_t d = cfg.d_model;
  const std::size_t di = cfg.d_inner;
  const std::size_t n = cfg.d_state;
  if (d == 0 || di == 0 || n == 0 || cfg.conv_kernel == 0) {
    throw ConfigError("mamba block dimensions must be positive");
  }
  MambaBlockParams p;
  p.norm_gain = Tensor::full({d}, 1.0, true);
  p.norm_bias = Tensor::zeros({d}, true);
  p.in_proj = uniform_param({d, 2 * di}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  p.conv_kernel = uniform_param({cfg.conv_kernel, di},
                                1.0 / std::sqrt(static_cast<double>(cfg.conv_kernel)), rng);
  p.conv_bias = uniform_param({di}, 1.0 / std::sqrt(static_cast<double>(cfg.conv_kernel)), rng);

  std::vector<double> a_log(di * n);
  for (std::size_t i = 0; i < di; ++i) {
    for (std::size_t k = 0; k < n; ++k) a_log[i * n + k] = std::log(static_cast<double>(k + 1));
  }
  p.ssm.a_log = Tensor::from({di, n}, std::move(a_log), true);
  const double inner_bound = 1.0 / std::sqrt(static_cast<double>(di));
  p.ssm.b_proj = uniform_param({di, n}, inner_bound, rng);
  p.ssm.c_proj = uniform_param({di, n}, inner_bound, rng);
  p.ssm.delta_proj = uniform_param({di, di}, inner_bound, rng);
  std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
  std::vector<double> delta_bias(di);
  for (double& b : delta_bias) b = inverse_softplus(std::exp(log_dt(rng)));
  p.ssm.delta_bias = Tensor::from({di}, std::move(delta_bias), true);
  p.ssm.d_skip = cfg.use_skip ? Tensor::full({di}, 1.0, true) : Tensor::zeros({di}, false);
  p.out_proj = Tensor::zeros({di, d}, true);
  return p;
}

void append_named(const MambaBlockParams& p, const std::string& prefix, std::vector<NamedTensor>& out) {
  out.emplace_back(prefix + ".norm_gain", p.norm_gain);
  out.emplace_back(prefix + ".norm_bias", p.norm_bias);
  out.emplace_back(prefix + ".in_proj", p.in_proj);
  out.emplace_back(prefix + ".conv_kernel", p.conv_kernel);
  out.emplace_back(prefix + ".conv_bias", p.conv_bias);
  out.emplace_back(prefix + ".ssm.a_log", p.ssm.a_log);
  out.emplace_back(prefix + ".ssm.b_proj", p.ssm.b_proj);
  out.emplace_back(prefix + ".ssm.c_proj", p.ssm.c_proj);
  out.emplace_back(prefix + ".ssm.delta_proj", p.ssm.delta_proj);
  out.emplace_back(prefix + ".ssm.delta_bias", p.ssm.delta_bias);
  if (p.ssm.d_skip.requires_grad()) out.emplace_back(prefix + ".ssm.d_skip", p.ssm.d_skip);
  out.emplace_back(prefix + ".out_proj", p.out_proj);
}

std::size_t mamba_block_param_count(const MambaBlockConfig& cfg) {
  const std::size_t d = cfg.d_model;
  const std::size_t di = cfg.d_inner;
  const std::size_t n = cfg.d_state;
  return 2 * d + d * 2 * di + (cfg.conv_kernel + 1) * di + 3 * di * n + di * di + di +
         (cfg.use_skip ? di : 0) + di * d;
}

Tensor mamba_block(const Tensor& x, const MambaBlockParams& p, const MambaBlockConfig& cfg) {
  if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
    throw ShapeError("mamba_block expects [T x " + std::to_string(cfg.d_model) + "], got " +
                     shape_str(x.shape()));
  }
  const std::size_t di = cfg.d_inner;
  const Tensor xn = layer_norm(x, p.norm_gain, p.norm_bias, cfg.norm_eps);
  const Tensor uz = matmul(xn, p.in_proj);
  const Tensor u_pre = slice_cols(uz, 0, di);
  const Tensor z = slice_cols(uz, di, 2 * di);
  const Tensor u = silu(add(depthwise_causal_conv1d(u_pre, p.conv_kernel), p.conv_bias));
  const Tensor delta = softplus(add(matmul(u, p.ssm.delta_proj), p.ssm.delta_bias));
  const Tensor b = matmul(u, p.ssm.b_proj);
  const Tensor c = matmul(u, p.ssm.c_proj);
  const Tensor a = neg(exp(p.ssm.a_log));
  const Tensor y = selective_scan(u, delta, a, b, c, p.ssm.d_skip, cfg.scan_mode);
  const Tensor gated = mul(y, silu(z));
  return add(x, matmul(gated, p.out_proj));
}

MambaBlockState::MambaBlockState(const MambaBlockConfig& cfg)
    : window_((cfg.conv_kernel - 1) * cfg.d_inner, 0.0), state_(cfg.d_inner * cfg.d_state, 0.0) {}

std::vector<double> MambaBlockState::step(std::span<const double> x, const MambaBlockParams& p,
                                          const MambaBlockConfig& cfg) {
  const std::size_t d = cfg.d_model;
  const std::size_t di = cfg.d_inner;
  const std::size_t n = cfg.d_state;
  const std::size_t width = cfg.conv_kernel;
  if (x.size() != d) throw ShapeError("MambaBlockState::step input width mismatch");

  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + cfg.norm_eps);
  std::vector<double> xn(d);
  for (std::size_t j = 0; j < d; ++j) xn[j] = (x[j] - mu) * inv * p.norm_gain[j] + p.norm_bias[j];

  std::vector<double> uz(2 * di);
  vec_mat(xn, p.in_proj, 2 * di, uz.data());

  std::vector<double> u(di);
  for (std::size_t c = 0; c < di; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < width; ++k) acc += p.conv_kernel[k * di + c] * window_[k * di + c];
    acc += p.conv_kernel[(width - 1) * di + c] * uz[c];
    acc += p.conv_bias[c];
    u[c] = acc * sigmoid_scalar(acc);
  }
  if (width > 1) {
    std::copy(window_.begin() + di, window_.end(), window_.begin());
    std::copy_n(uz.begin(), di, window_.end() - di);
  }

  std::vector<double> delta(di);
  vec_mat(u, p.ssm.delta_proj, di, delta.data());
  for (std::size_t c = 0; c < di; ++c) delta[c] = softplus_scalar(delta[c] + p.ssm.delta_bias[c]);
  std::vector<double> bv(n);
  std::vector<double> cv(n);
  vec_mat(u, p.ssm.b_proj, n, bv.data());
  vec_mat(u, p.ssm.c_proj, n, cv.data());

  std::vector<double> gated(di);
  for (std::size_t c = 0; c < di; ++c) {
    double y = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = -std::exp(p.ssm.a_log[c * n + k]);
      double& h = state_[c * n + k];
      h = std::exp(delta[c] * a) * h + delta[c] * u[c] * bv[k];
      y += cv[k] * h;
    }
    y += p.ssm.d_skip[c] * u[c];
    const double zc = uz[di + c];
    gated[c] = y * zc * sigmoid_scalar(zc);
  }

  std::vector<double> out(d);
  vec_mat(gated, p.out_proj, d, out.data());
  for (std::size_t j = 0; j < d; ++j) out[j] += x[j];
  return out;
}

}  // namespace ssm_asr

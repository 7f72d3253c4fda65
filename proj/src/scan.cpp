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

#include "ssm_asr/scan.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/ops.hpp"

namespace ssm_asr {

namespace {

struct ScanDims {
  std::size_t steps;
  std::size_t d;
  std::size_t n;
};

ScanDims check_scan_shapes(const Tensor& a_bar, const Tensor& b_bar_x, const Tensor& C,
                           const Tensor& x, const Tensor& d_skip) {
  if (a_bar.rank() != 3 || a_bar.shape() != b_bar_x.shape()) {
    throw ShapeError("scan: a_bar and b_bar_x must share a [T x D x N] shape");
  }
  const ScanDims dims{a_bar.dim(0), a_bar.dim(1), a_bar.dim(2)};
  if (C.shape() != Shape{dims.steps, dims.n}) throw ShapeError("scan: C must be [T x N]");
  if (x.shape() != Shape{dims.steps, dims.d}) throw ShapeError("scan: x must be [T x D]");
  if (d_skip.numel() != dims.d) throw ShapeError("scan: d_skip must have D elements");
  return dims;
}

Tensor readout(std::span<const double> h, const Tensor& C, const Tensor& x, const Tensor& d_skip,
               const ScanDims& dims) {
  std::vector<double> y(dims.steps * dims.d);
  const auto c = C.data();
  const auto xv = x.data();
  for (std::size_t t = 0; t < dims.steps; ++t) {
    for (std::size_t d = 0; d < dims.d; ++d) {
      const double* ht = h.data() + (t * dims.d + d) * dims.n;
      double acc = 0.0;
      for (std::size_t k = 0; k < dims.n; ++k) acc += c[t * dims.n + k] * ht[k];
      y[t * dims.d + d] = acc + d_skip[d] * xv[t * dims.d + d];
    }
  }
  return detail::make_output({dims.steps, dims.d}, std::move(y), false);
}

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

Discretized discretize(const Tensor& delta, const Tensor& A, const Tensor& B) {
  if (delta.rank() != 2 || A.rank() != 2 || B.rank() != 2) {
    throw ShapeError("discretize expects delta [T x D], A [D x N], B [T x N]");
  }
  const std::size_t steps = delta.dim(0);
  const std::size_t d = delta.dim(1);
  const std::size_t n = A.dim(1);
  if (A.dim(0) != d || B.dim(0) != steps || B.dim(1) != n) {
    throw ShapeError("discretize shape mismatch: delta " + shape_str(delta.shape()) + ", A " +
                     shape_str(A.shape()) + ", B " + shape_str(B.shape()));
  }
  for (double v : delta.data()) {
    if (!(v > 0.0)) throw ContractError("discretize requires delta > 0");
  }
  std::vector<double> a_bar(steps * d * n);
  std::vector<double> b_bar(steps * d * n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double dt = delta[t * d + i];
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t o = (t * d + i) * n + k;
        a_bar[o] = std::exp(dt * A[i * n + k]);
        b_bar[o] = dt * B[t * n + k];
      }
    }
  }
  return {detail::make_output({steps, d, n}, std::move(a_bar), false),
          detail::make_output({steps, d, n}, std::move(b_bar), false)};
}

void scan_states_sequential(std::span<const double> a, std::span<const double> b,
                            std::size_t steps, std::size_t channels, std::span<double> h) {
  std::vector<double> state(channels, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t base = t * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      state[c] = a[base + c] * state[c] + b[base + c];
      h[base + c] = state[c];
    }
  }
}

void scan_states_parallel(std::span<const double> a, std::span<const double> b,
                          std::size_t steps, std::size_t channels, std::span<double> h) {
  if (steps == 0) return;
  const std::size_t padded = next_pow2(steps);
  std::vector<double> ea(padded * channels, 1.0);
  std::vector<double> eb(padded * channels, 0.0);
  std::copy(a.begin(), a.begin() + steps * channels, ea.begin());
  std::copy(b.begin(), b.begin() + steps * channels, eb.begin());

  // Up-sweep: node i accumulates the composition of its subtree.
  for (std::size_t s = 1; s < padded; s <<= 1) {
    for (std::size_t i = 2 * s - 1; i < padded; i += 2 * s) {
      double* ra = ea.data() + i * channels;
      double* rb = eb.data() + i * channels;
      const double* la = ea.data() + (i - s) * channels;
      const double* lb = eb.data() + (i - s) * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        rb[c] = ra[c] * lb[c] + rb[c];
        ra[c] = ra[c] * la[c];
      }
    }
  }
  // Down-sweep to exclusive prefixes.
  std::fill_n(ea.begin() + (padded - 1) * channels, channels, 1.0);
  std::fill_n(eb.begin() + (padded - 1) * channels, channels, 0.0);
  for (std::size_t s = padded >> 1; s >= 1; s >>= 1) {
    for (std::size_t i = 2 * s - 1; i < padded; i += 2 * s) {
      double* ra = ea.data() + i * channels;
      double* rb = eb.data() + i * channels;
      double* la = ea.data() + (i - s) * channels;
      double* lb = eb.data() + (i - s) * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        const double left_a = la[c];
        const double left_b = lb[c];
        la[c] = ra[c];
        lb[c] = rb[c];
        rb[c] = left_a * rb[c] + left_b;
        ra[c] = left_a * ra[c];
      }
    }
  }
  // Applying element t to the exclusive prefix state yields h_t (h_0 = 0).
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t base = t * channels;
    for (std::size_t c = 0; c < channels; ++c) h[base + c] = a[base + c] * eb[base + c] + b[base + c];
  }
}

Tensor scan_sequential(const Tensor& a_bar, const Tensor& b_bar_x, const Tensor& C,
                       const Tensor& x, const Tensor& d_skip) {
  const ScanDims dims = check_scan_shapes(a_bar, b_bar_x, C, x, d_skip);
  std::vector<double> h(a_bar.numel());
  scan_states_sequential(a_bar.data(), b_bar_x.data(), dims.steps, dims.d * dims.n, h);
  return readout(h, C, x, d_skip, dims);
}

Tensor scan_parallel(const Tensor& a_bar, const Tensor& b_bar_x, const Tensor& C,
                     const Tensor& x, const Tensor& d_skip) {
  const ScanDims dims = check_scan_shapes(a_bar, b_bar_x, C, x, d_skip);
  std::vector<double> h(a_bar.numel());
  scan_states_parallel(a_bar.data(), b_bar_x.data(), dims.steps, dims.d * dims.n, h);
  return readout(h, C, x, d_skip, dims);
}

Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& B,
                      const Tensor& C, const Tensor& d_skip, ScanMode mode) {
  if (u.rank() != 2 || A.rank() != 2) throw ShapeError("selective_scan expects u [T x D], A [D x N]");
  const std::size_t steps = u.dim(0);
  const std::size_t dd = u.dim(1);
  const std::size_t nn = A.dim(1);
  if (delta.shape() != u.shape() || A.dim(0) != dd || B.shape() != Shape{steps, nn} ||
      C.shape() != Shape{steps, nn} || d_skip.numel() != dd) {
    throw ShapeError("selective_scan shape mismatch: u " + shape_str(u.shape()) + ", delta " +
                     shape_str(delta.shape()) + ", A " + shape_str(A.shape()) + ", B " +
                     shape_str(B.shape()) + ", C " + shape_str(C.shape()));
  }
  const std::size_t channels = dd * nn;

  // Fills decay and drive for rows [begin, end) into a/b laid out [(t - begin) x channels].
  auto discretize_rows = [nn, dd, channels](const std::vector<double>& uv,
                                            const std::vector<double>& dv,
                                            const std::vector<double>& av,
                                            const std::vector<double>& bv, std::size_t begin,
                                            std::size_t end, double* a, double* b) {
    for (std::size_t t = begin; t < end; ++t) {
      double* ar = a + (t - begin) * channels;
      double* br = b + (t - begin) * channels;
      for (std::size_t i = 0; i < dd; ++i) {
        const double dt = dv[t * dd + i];
        const double drive = dt * uv[t * dd + i];
        for (std::size_t k = 0; k < nn; ++k) {
          ar[i * nn + k] = std::exp(dt * av[i * nn + k]);
          br[i * nn + k] = drive * bv[t * nn + k];
        }
      }
    }
  };

  const auto& uv = u.node()->data;
  const auto& dv = delta.node()->data;
  const auto& av = A.node()->data;
  const auto& bv = B.node()->data;
  const auto& cv = C.node()->data;
  for (double v : dv) {
    if (!(v > 0.0)) throw ContractError("selective_scan requires delta > 0");
  }

  std::vector<double> a(steps * channels);
  std::vector<double> b(steps * channels);
  discretize_rows(uv, dv, av, bv, 0, steps, a.data(), b.data());
  std::vector<double> h(steps * channels);
  if (mode == ScanMode::kParallel) {
    scan_states_parallel(a, b, steps, channels, h);
  } else {
    scan_states_sequential(a, b, steps, channels, h);
  }

  std::vector<double> y(steps * dd);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < dd; ++i) {
      const double* ht = h.data() + t * channels + i * nn;
      double acc = 0.0;
      for (std::size_t k = 0; k < nn; ++k) acc += cv[t * nn + k] * ht[k];
      y[t * dd + i] = acc + d_skip[i] * uv[t * dd + i];
    }
  }

  const bool rec = detail::needs_record({&u, &delta, &A, &B, &C, &d_skip});
  Tensor result = detail::make_output({steps, dd}, std::move(y), rec);
  if (!rec) return result;

  const std::size_t seg = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(steps))));
  const std::size_t n_seg = (steps + seg - 1) / seg;
  // checkpoints[s] is the state entering segment s.
  auto checkpoints = std::make_shared<std::vector<double>>(n_seg * channels, 0.0);
  for (std::size_t s = 1; s < n_seg; ++s) {
    std::copy_n(h.begin() + (s * seg - 1) * channels, channels, checkpoints->begin() + s * channels);
  }

  auto un = u.node();
  auto dn = delta.node();
  auto an = A.node();
  auto bn = B.node();
  auto cn = C.node();
  auto sn = d_skip.node();
  auto on = result.node();
  active_tape()->record(result.node(), [=]() {
    const auto& gy = on->grad;
    std::vector<double> scratch_gu(steps * dd, 0.0);
    std::vector<double> scratch_gd(steps * dd, 0.0);
    std::vector<double> scratch_ga(dd * nn, 0.0);
    std::vector<double> scratch_gb(steps * nn, 0.0);
    std::vector<double> scratch_gc(steps * nn, 0.0);
    std::vector<double> scratch_gs(dd, 0.0);

    const auto& uv = un->data;
    const auto& dv = dn->data;
    const auto& av = an->data;
    const auto& bv = bn->data;
    const auto& cv = cn->data;
    const auto& sv = sn->data;

    std::vector<double> carry(channels, 0.0);
    std::vector<double> seg_a(seg * channels);
    std::vector<double> seg_b(seg * channels);
    std::vector<double> seg_h(seg * channels);
    for (std::size_t s = n_seg; s-- > 0;) {
      const std::size_t begin = s * seg;
      const std::size_t end = std::min(steps, begin + seg);
      discretize_rows(uv, dv, av, bv, begin, end, seg_a.data(), seg_b.data());
      const double* h_in = checkpoints->data() + s * channels;
      for (std::size_t t = begin; t < end; ++t) {
        const double* prev = t == begin ? h_in : seg_h.data() + (t - begin - 1) * channels;
        double* cur = seg_h.data() + (t - begin) * channels;
        const double* ar = seg_a.data() + (t - begin) * channels;
        const double* br = seg_b.data() + (t - begin) * channels;
        for (std::size_t c = 0; c < channels; ++c) cur[c] = ar[c] * prev[c] + br[c];
      }
      for (std::size_t t = end; t-- > begin;) {
        const double* prev = t == begin ? h_in : seg_h.data() + (t - begin - 1) * channels;
        const double* cur = seg_h.data() + (t - begin) * channels;
        const double* ar = seg_a.data() + (t - begin) * channels;
        for (std::size_t i = 0; i < dd; ++i) {
          const double g = gy[t * dd + i];
          const double dt = dv[t * dd + i];
          const double ut = uv[t * dd + i];
          scratch_gu[t * dd + i] += sv[i] * g;
          scratch_gs[i] += g * ut;
          double g_delta = 0.0;
          double g_u = 0.0;
          for (std::size_t k = 0; k < nn; ++k) {
            const std::size_t c = i * nn + k;
            const double gh = carry[c] + cv[t * nn + k] * g;
            scratch_gc[t * nn + k] += g * cur[c];
            const double ga = gh * prev[c] * ar[c];
            g_delta += ga * av[c] + gh * bv[t * nn + k] * ut;
            scratch_ga[c] += ga * dt;
            scratch_gb[t * nn + k] += gh * dt * ut;
            g_u += gh * dt * bv[t * nn + k];
            carry[c] = gh * ar[c];
          }
          scratch_gd[t * dd + i] += g_delta;
          scratch_gu[t * dd + i] += g_u;
        }
      }
    }

    auto accumulate = [](const std::shared_ptr<TensorNode>& node, const std::vector<double>& g) {
      if (!node->requires_grad) return;
      auto& dst = node->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    };
    accumulate(un, scratch_gu);
    accumulate(dn, scratch_gd);
    accumulate(an, scratch_ga);
    accumulate(bn, scratch_gb);
    accumulate(cn, scratch_gc);
    accumulate(sn, scratch_gs);
  });
  return result;
}

Tensor gated_recurrence(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2) throw ShapeError("gated_recurrence expects x [T x D]");
  const std::size_t steps = x.dim(0);
  const std::size_t d = x.dim(1);
  if (weight.shape() != Shape{d, d} || bias.numel() != d) {
    throw ShapeError("gated_recurrence expects weight [D x D] and bias [D]");
  }
  std::vector<double> h(steps * d);
  std::vector<double> state(d, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      double pre = bias[j];
      for (std::size_t i = 0; i < d; ++i) pre += x[t * d + i] * weight[i * d + j];
      const double g = sigmoid_scalar(pre);
      state[j] = (1.0 - g) * state[j] + g * x[t * d + j];
      h[t * d + j] = state[j];
    }
  }
  return detail::make_output({steps, d}, std::move(h), false);
}

}  // namespace ssm_asr

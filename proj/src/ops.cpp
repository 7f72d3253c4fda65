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

#include "ssm_asr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

using detail::make_output;
using detail::needs_record;

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

void record(const Tensor& out, std::function<void()> fn) {
  active_tape()->record(out.node(), std::move(fn));
}

// Output shape plus, for each output element, the flat index into each
// operand. Index vectors are left empty when the operand is not broadcast.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
};

BroadcastPlan plan_broadcast(const Shape& sa, const Shape& sb) {
  BroadcastPlan plan;
  if (sa == sb) {
    plan.out = sa;
    return plan;
  }
  Shape a = sa;
  Shape b = sb;
  if (a.size() + 1 == b.size()) a.insert(a.begin(), 1);
  if (b.size() + 1 == a.size()) b.insert(b.begin(), 1);
  if (a.size() != b.size()) {
    throw ShapeError("cannot broadcast " + shape_str(sa) + " with " + shape_str(sb));
  }
  const std::size_t rank = a.size();
  plan.out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (a[i] == b[i] || b[i] == 1) {
      plan.out[i] = a[i];
    } else if (a[i] == 1) {
      plan.out[i] = b[i];
    } else {
      throw ShapeError("cannot broadcast " + shape_str(sa) + " with " + shape_str(sb));
    }
  }
  auto strides_for = [&](const Shape& s) {
    std::vector<std::size_t> st(rank, 0);
    std::size_t acc = 1;
    for (std::size_t i = rank; i-- > 0;) {
      st[i] = s[i] == 1 ? 0 : acc;
      acc *= s[i];
    }
    return st;
  };
  const auto a_st = strides_for(a);
  const auto b_st = strides_for(b);
  const std::size_t n = shape_numel(plan.out);
  plan.a_index.resize(n);
  plan.b_index.resize(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t o = 0; o < n; ++o) {
    plan.a_index[o] = ia;
    plan.b_index[o] = ib;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      ia += a_st[ax];
      ib += b_st[ax];
      if (idx[ax] < plan.out[ax]) break;
      ia -= a_st[ax] * idx[ax];
      ib -= b_st[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return plan;
}

Tensor binary(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a.shape(), b.shape()));
  const std::size_t n = shape_numel(plan->out);
  const bool direct = plan->a_index.empty();
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n);
  for (std::size_t o = 0; o < n; ++o) {
    const double x = ad[direct ? o : plan->a_index[o]];
    const double y = bd[direct ? o : plan->b_index[o]];
    switch (op) {
      case ElementwiseOp::kAdd: out[o] = x + y; break;
      case ElementwiseOp::kSub: out[o] = x - y; break;
      case ElementwiseOp::kMul: out[o] = x * y; break;
      default: throw ContractError("not a binary op");
    }
  }
  const bool rec = needs_record({&a, &b});
  Tensor result = make_output(plan->out, std::move(out), rec);
  if (rec) {
    auto an = a.node();
    auto bn = b.node();
    auto on = result.node();
    record(result, [op, an, bn, on, plan, direct]() {
      const auto& g = on->grad;
      const std::size_t n = g.size();
      if (an->requires_grad) {
        auto& ga = an->ensure_grad();
        for (std::size_t o = 0; o < n; ++o) {
          const std::size_t ia = direct ? o : plan->a_index[o];
          double d = g[o];
          if (op == ElementwiseOp::kMul) d *= bn->data[direct ? o : plan->b_index[o]];
          ga[ia] += d;
        }
      }
      if (bn->requires_grad) {
        auto& gb = bn->ensure_grad();
        for (std::size_t o = 0; o < n; ++o) {
          const std::size_t ib = direct ? o : plan->b_index[o];
          double d = g[o];
          if (op == ElementwiseOp::kSub) d = -d;
          if (op == ElementwiseOp::kMul) d *= an->data[direct ? o : plan->a_index[o]];
          gb[ib] += d;
        }
      }
    });
  }
  return result;
}

Tensor unary(ElementwiseOp op, const Tensor& a) {
  const auto ad = a.data();
  const std::size_t n = ad.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ad[i];
    switch (op) {
      case ElementwiseOp::kExp: out[i] = std::exp(x); break;
      case ElementwiseOp::kSigmoid: out[i] = sigmoid_scalar(x); break;
      case ElementwiseOp::kSilu: out[i] = x * sigmoid_scalar(x); break;
      case ElementwiseOp::kSoftplus: out[i] = softplus_scalar(x); break;
      default: throw ContractError("not a unary op");
    }
  }
  const bool rec = needs_record({&a});
  Tensor result = make_output(a.shape(), std::move(out), rec);
  if (rec) {
    auto an = a.node();
    auto on = result.node();
    record(result, [op, an, on]() {
      const auto& g = on->grad;
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = an->data[i];
        double d = 0.0;
        switch (op) {
          case ElementwiseOp::kExp: d = on->data[i]; break;
          case ElementwiseOp::kSigmoid: d = on->data[i] * (1.0 - on->data[i]); break;
          case ElementwiseOp::kSilu: {
            const double s = sigmoid_scalar(x);
            d = s * (1.0 + x * (1.0 - s));
            break;
          }
          case ElementwiseOp::kSoftplus: d = sigmoid_scalar(x); break;
          default: break;
        }
        ga[i] += g[i] * d;
      }
    });
  }
  return result;
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " expects a matrix, got " + shape_str(t.shape()));
  }
}

// c[m x n] += a[m x k] @ b[k x n]
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// ga[m x k] += g[m x n] @ b^T
void gemm_acc_bt(const double* g, const double* b, double* ga, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    double* arow = ga + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      arow[p] += acc;
    }
  }
}

// gb[k x n] += a^T @ g[m x n]
void gemm_acc_at(const double* a, const double* g, double* gb, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* brow = gb + p * n;
      for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
    }
  }
}

}  // namespace

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case ElementwiseOp::kAdd:
    case ElementwiseOp::kSub:
    case ElementwiseOp::kMul:
      if (!b.defined()) throw ContractError("binary elementwise op requires two operands");
      return binary(op, a, b);
    default:
      return unary(op, a);
  }
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(ElementwiseOp::kAdd, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(ElementwiseOp::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(ElementwiseOp::kMul, a, b); }
Tensor exp(const Tensor& a) { return unary(ElementwiseOp::kExp, a); }
Tensor sigmoid(const Tensor& a) { return unary(ElementwiseOp::kSigmoid, a); }
Tensor silu(const Tensor& a) { return unary(ElementwiseOp::kSilu, a); }
Tensor softplus(const Tensor& a) { return unary(ElementwiseOp::kSoftplus, a); }

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  const bool rec = needs_record({&a});
  Tensor result = make_output(a.shape(), std::move(out), rec);
  if (rec) {
    auto an = a.node();
    auto on = result.node();
    record(result, [an, on, factor]() {
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * on->grad[i];
    });
  }
  return result;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  std::size_t batch = 1;
  bool shared_b = false;
  if (a.rank() == 2 && b.rank() == 2) {
  } else if (a.rank() == 3 && b.rank() == 3) {
    if (a.dim(0) != b.dim(0)) {
      throw ShapeError("matmul batch mismatch " + shape_str(a.shape()) + " @ " + shape_str(b.shape()));
    }
    batch = a.dim(0);
  } else if (a.rank() == 3 && b.rank() == 2) {
    batch = a.dim(0);
    shared_b = true;
  } else {
    throw ShapeError("matmul unsupported ranks " + shape_str(a.shape()) + " @ " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2);
  const std::size_t n = b.dim(b.rank() - 1);
  if (k != kb) {
    throw ShapeError("matmul inner dimension mismatch " + shape_str(a.shape()) + " @ " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(batch * m * n, 0.0);
  const std::size_t b_step = shared_b ? 0 : k * n;
  for (std::size_t bi = 0; bi < batch; ++bi) {
    gemm_acc(a.data().data() + bi * m * k, b.data().data() + bi * b_step, out.data() + bi * m * n,
             m, k, n);
  }
  Shape shape = a.rank() == 3 ? Shape{batch, m, n} : Shape{m, n};
  const bool rec = needs_record({&a, &b});
  Tensor result = make_output(std::move(shape), std::move(out), rec);
  if (rec) {
    auto an = a.node();
    auto bn = b.node();
    auto on = result.node();
    record(result, [an, bn, on, batch, m, k, n, b_step]() {
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* g = on->grad.data() + bi * m * n;
        if (an->requires_grad) {
          gemm_acc_bt(g, bn->data.data() + bi * b_step, an->ensure_grad().data() + bi * m * k, m,
                      k, n);
        }
        if (bn->requires_grad) {
          gemm_acc_at(an->data.data() + bi * m * k, g, bn->ensure_grad().data() + bi * b_step, m,
                      k, n);
        }
      }
    });
  }
  return result;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, std::size_t stride, std::size_t padding) {
  require_matrix(x, "conv1d input");
  if (kernel.rank() != 3) throw ShapeError("conv1d kernel must be [K x C_in x C_out]");
  const std::size_t len = x.dim(0);
  const std::size_t cin = x.dim(1);
  const std::size_t width = kernel.dim(0);
  const std::size_t cout = kernel.dim(2);
  if (kernel.dim(1) != cin) {
    throw ShapeError("conv1d channel mismatch " + shape_str(x.shape()) + " vs kernel " +
                     shape_str(kernel.shape()));
  }
  if (stride < 1) throw ContractError("conv1d stride must be >= 1");
  if (len + 2 * padding < width) throw ShapeError("conv1d output length < 1");
  const std::size_t out_len = (len + 2 * padding - width) / stride + 1;

  std::vector<double> out(out_len * cout, 0.0);
  const double* xd = x.data().data();
  const double* wd = kernel.data().data();
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(t * stride + k) -
                               static_cast<std::ptrdiff_t>(padding);
      if (r < 0 || r >= static_cast<std::ptrdiff_t>(len)) continue;
      gemm_acc(xd + r * cin, wd + k * cin * cout, out.data() + t * cout, 1, cin, cout);
    }
  }
  const bool rec = needs_record({&x, &kernel});
  Tensor result = make_output({out_len, cout}, std::move(out), rec);
  if (rec) {
    auto xn = x.node();
    auto kn = kernel.node();
    auto on = result.node();
    record(result, [=]() {
      for (std::size_t t = 0; t < out_len; ++t) {
        const double* g = on->grad.data() + t * cout;
        for (std::size_t k = 0; k < width; ++k) {
          const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(t * stride + k) -
                                   static_cast<std::ptrdiff_t>(padding);
          if (r < 0 || r >= static_cast<std::ptrdiff_t>(len)) continue;
          if (xn->requires_grad) {
            gemm_acc_bt(g, kn->data.data() + k * cin * cout, xn->ensure_grad().data() + r * cin, 1,
                        cin, cout);
          }
          if (kn->requires_grad) {
            gemm_acc_at(xn->data.data() + r * cin, g, kn->ensure_grad().data() + k * cin * cout, 1,
                        cin, cout);
          }
        }
      }
    });
  }
  return result;
}

Tensor depthwise_causal_conv1d(const Tensor& x, const Tensor& kernel) {
  require_matrix(x, "depthwise_causal_conv1d input");
  require_matrix(kernel, "depthwise_causal_conv1d kernel");
  const std::size_t len = x.dim(0);
  const std::size_t ch = x.dim(1);
  const std::size_t width = kernel.dim(0);
  if (kernel.dim(1) != ch) throw ShapeError("depthwise kernel channel mismatch");
  std::vector<double> out(len * ch, 0.0);
  const auto xd = x.data();
  const auto wd = kernel.data();
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(t + k) -
                               static_cast<std::ptrdiff_t>(width - 1);
      if (r < 0) continue;
      for (std::size_t c = 0; c < ch; ++c) out[t * ch + c] += wd[k * ch + c] * xd[r * ch + c];
    }
  }
  const bool rec = needs_record({&x, &kernel});
  Tensor result = make_output({len, ch}, std::move(out), rec);
  if (rec) {
    auto xn = x.node();
    auto kn = kernel.node();
    auto on = result.node();
    record(result, [=]() {
      const auto& g = on->grad;
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t k = 0; k < width; ++k) {
          const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(t + k) -
                                   static_cast<std::ptrdiff_t>(width - 1);
          if (r < 0) continue;
          if (xn->requires_grad) {
            auto& gx = xn->ensure_grad();
            for (std::size_t c = 0; c < ch; ++c) gx[r * ch + c] += kn->data[k * ch + c] * g[t * ch + c];
          }
          if (kn->requires_grad) {
            auto& gk = kn->ensure_grad();
            for (std::size_t c = 0; c < ch; ++c) gk[k * ch + c] += xn->data[r * ch + c] * g[t * ch + c];
          }
        }
      }
    });
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (eps <= 0.0) throw ContractError("layer_norm eps must be positive");
  const std::size_t width = x.shape().back();
  if (gain.numel() != width || bias.numel() != width) {
    throw ShapeError("layer_norm gain/bias must have " + std::to_string(width) + " elements");
  }
  const std::size_t rows = x.numel() / width;
  const auto xd = x.data();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += row[j];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(width);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t j = 0; j < width; ++j) {
      const double h = (row[j] - mu) * inv;
      (*xhat)[r * width + j] = h;
      out[r * width + j] = h * gain[j] + bias[j];
    }
  }
  const bool rec = needs_record({&x, &gain, &bias});
  Tensor result = make_output(x.shape(), std::move(out), rec);
  if (rec) {
    auto xn = x.node();
    auto gn = gain.node();
    auto bn = bias.node();
    auto on = result.node();
    record(result, [=]() {
      const auto& g = on->grad;
      std::vector<double> gh(width);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* h = xhat->data() + r * width;
        const double* gy = g.data() + r * width;
        if (gn->requires_grad) {
          auto& gg = gn->ensure_grad();
          for (std::size_t j = 0; j < width; ++j) gg[j] += gy[j] * h[j];
        }
        if (bn->requires_grad) {
          auto& gb = bn->ensure_grad();
          for (std::size_t j = 0; j < width; ++j) gb[j] += gy[j];
        }
        if (xn->requires_grad) {
          double mean_gh = 0.0;
          double mean_ghh = 0.0;
          for (std::size_t j = 0; j < width; ++j) {
            gh[j] = gy[j] * gn->data[j];
            mean_gh += gh[j];
            mean_ghh += gh[j] * h[j];
          }
          mean_gh /= static_cast<double>(width);
          mean_ghh /= static_cast<double>(width);
          auto& gx = xn->ensure_grad();
          const double inv = (*inv_std)[r];
          for (std::size_t j = 0; j < width; ++j) {
            gx[r * width + j] += inv * (gh[j] - mean_gh - h[j] * mean_ghh);
          }
        }
      }
    });
  }
  return result;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_id) {
  require_matrix(logits, "softmax_cross_entropy logits");
  const std::size_t len = logits.dim(0);
  const std::size_t vocab = logits.dim(1);
  if (targets.size() != len) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(len) + " positions");
  }
  std::size_t counted = 0;
  for (int t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw ContractError("target id " + std::to_string(t) + " outside vocabulary");
    }
    ++counted;
  }
  if (counted == 0) throw ContractError("undefined loss: every position is ignored");

  const auto ld = logits.data();
  auto probs = std::make_shared<std::vector<double>>(len * vocab, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    if (targets[t] == ignore_id) continue;
    const double* row = ld.data() + t * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(row[v] - mx);
    const double log_z = std::log(z);
    for (std::size_t v = 0; v < vocab; ++v) (*probs)[t * vocab + v] = std::exp(row[v] - mx - log_z);
    total -= row[targets[t]] - mx - log_z;
  }
  const double norm = 1.0 / static_cast<double>(counted);
  const bool rec = needs_record({&logits});
  Tensor result = make_output({1}, {total * norm}, rec);
  if (rec) {
    auto ln = logits.node();
    auto on = result.node();
    std::vector<int> tg(targets.begin(), targets.end());
    record(result, [=]() {
      const double g = on->grad[0] * norm;
      auto& gl = ln->ensure_grad();
      for (std::size_t t = 0; t < len; ++t) {
        if (tg[t] == ignore_id) continue;
        for (std::size_t v = 0; v < vocab; ++v) gl[t * vocab + v] += g * (*probs)[t * vocab + v];
        gl[t * vocab + tg[t]] -= g;
      }
    });
  }
  return result;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  const bool rec = needs_record({&a});
  Tensor result = make_output({1}, {total}, rec);
  if (rec) {
    auto an = a.node();
    auto on = result.node();
    record(result, [an, on]() {
      auto& ga = an->ensure_grad();
      for (double& g : ga) g += on->grad[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_rows");
  if (begin >= end || end > a.dim(0)) throw ShapeError("slice_rows range out of bounds");
  const std::size_t cols = a.dim(1);
  std::vector<double> out(a.data().begin() + begin * cols, a.data().begin() + end * cols);
  const bool rec = needs_record({&a});
  Tensor result = make_output({end - begin, cols}, std::move(out), rec);
  if (rec) {
    auto an = a.node();
    auto on = result.node();
    record(result, [an, on, begin, cols]() {
      auto& ga = an->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[begin * cols + i] += on->grad[i];
    });
  }
  return result;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_cols");
  const std::size_t rows = a.dim(0);
  const std::size_t cols = a.dim(1);
  if (begin >= end || end > cols) throw ShapeError("slice_cols range out of bounds");
  const std::size_t width = end - begin;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().begin() + r * cols + begin, width, out.begin() + r * width);
  }
  const bool rec = needs_record({&a});
  Tensor result = make_output({rows, width}, std::move(out), rec);
  if (rec) {
    auto an = a.node();
    auto on = result.node();
    record(result, [an, on, rows, cols, width, begin]() {
      auto& ga = an->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < width; ++j) ga[r * cols + begin + j] += on->grad[r * width + j];
      }
    });
  }
  return result;
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
  require_matrix(top, "concat_rows");
  require_matrix(bottom, "concat_rows");
  if (top.dim(1) != bottom.dim(1)) throw ShapeError("concat_rows column mismatch");
  std::vector<double> out;
  out.reserve(top.numel() + bottom.numel());
  out.insert(out.end(), top.data().begin(), top.data().end());
  out.insert(out.end(), bottom.data().begin(), bottom.data().end());
  const bool rec = needs_record({&top, &bottom});
  Tensor result = make_output({top.dim(0) + bottom.dim(0), top.dim(1)}, std::move(out), rec);
  if (rec) {
    auto tn = top.node();
    auto bn = bottom.node();
    auto on = result.node();
    record(result, [tn, bn, on]() {
      const std::size_t split = tn->data.size();
      if (tn->requires_grad) {
        auto& g = tn->ensure_grad();
        for (std::size_t i = 0; i < split; ++i) g[i] += on->grad[i];
      }
      if (bn->requires_grad) {
        auto& g = bn->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += on->grad[split + i];
      }
    });
  }
  return result;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_matrix(table, "embedding table");
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  if (ids.empty()) throw ShapeError("embedding of empty id sequence");
  std::vector<double> out(ids.size() * width);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= vocab) {
      throw VocabError("token id " + std::to_string(ids[t]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    std::copy_n(table.data().begin() + ids[t] * width, width, out.begin() + t * width);
  }
  const bool rec = needs_record({&table});
  Tensor result = make_output({ids.size(), width}, std::move(out), rec);
  if (rec) {
    auto tn = table.node();
    auto on = result.node();
    std::vector<int> idv(ids.begin(), ids.end());
    record(result, [tn, on, idv, width]() {
      auto& g = tn->ensure_grad();
      for (std::size_t t = 0; t < idv.size(); ++t) {
        for (std::size_t j = 0; j < width; ++j) g[idv[t] * width + j] += on->grad[t * width + j];
      }
    });
  }
  return result;
}

}  // namespace ssm_asr

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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/grad_check.hpp"
#include "ssm_asr/ops.hpp"
#include "ssm_asr/tensor.hpp"
#include "test_util.hpp"

using namespace ssm_asr;
using ssm_asr::testing::random_tensor;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("tensor construction validates shape and data") {
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor::from({0, 2}, {}), ShapeError);
  const Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.at(1, 2) == 6.0);
  CHECK_FALSE(t.has_grad());
}

TEST_CASE("elementwise examples") {
  CHECK(silu(Tensor::scalar(0.0)).item() == 0.0);
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(values(add(Tensor::from({2}, {1, 2}), Tensor::from({2}, {3, 4}))) == std::vector<double>{4, 6});
  CHECK(values(sub(Tensor::from({2}, {1, 2}), Tensor::from({2}, {3, 5}))) == std::vector<double>{-2, -3});
  CHECK(softplus(Tensor::scalar(0.0)).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(Tensor::scalar(800.0)).item() == 800.0);
  CHECK(exp(Tensor::scalar(1.0)).item() == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("broadcasting stretches singleton axes only") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor row = Tensor::from({1, 3}, {10, 20, 30});
  const Tensor col = Tensor::from({2, 1}, {100, 200});
  const Tensor vec = Tensor::from({3}, {1, 1, 1});
  CHECK(values(add(a, row)) == std::vector<double>{11, 22, 33, 14, 25, 36});
  CHECK(values(add(a, col)) == std::vector<double>{101, 102, 103, 204, 205, 206});
  CHECK(values(mul(a, vec)) == values(a));
  CHECK_THROWS_AS(add(a, Tensor::from({2}, {1, 2})), ShapeError);
  CHECK_THROWS_AS(add(a, Tensor::from({3, 3}, std::vector<double>(9, 0.0))), ShapeError);
}

TEST_CASE("broadcast addition is associative for same-shape operands") {
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor({4, 5}, rng), b = random_tensor({4, 5}, rng), c = random_tensor({4, 5}, rng);
  const Tensor l = add(add(a, b), c);
  const Tensor r = add(a, add(b, c));
  CHECK(ssm_asr::testing::max_abs_diff(l.data(), r.data()) < 1e-12);
}

TEST_CASE("matmul examples and errors") {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(values(matmul(a, Tensor::from({2, 1}, {5, 6}))) == std::vector<double>{17, 39});
  CHECK(values(matmul(a, Tensor::from({2, 2}, {1, 0, 0, 1}))) == values(a));
  CHECK_THROWS_AS(matmul(a, Tensor::from({3, 1}, {1, 2, 3})), ShapeError);
  const Tensor batched = Tensor::from({2, 1, 2}, {1, 2, 3, 4});
  CHECK(values(matmul(batched, Tensor::from({2, 1}, {5, 6}))) == std::vector<double>{17, 39});
  CHECK(values(matmul(batched, Tensor::from({2, 2, 1}, {1, 1, 2, 0}))) == std::vector<double>{3, 6});
}

TEST_CASE("conv1d examples") {
  const Tensor x = Tensor::from({3, 1}, {1, 2, 3});
  CHECK(values(conv1d(x, Tensor::from({1, 1, 1}, {1}), 1, 0)) == std::vector<double>{1, 2, 3});
  const Tensor x4 = Tensor::from({4, 1}, {1, 2, 3, 4});
  CHECK(values(conv1d(x4, Tensor::from({2, 1, 1}, {1, 1}), 2, 0)) == std::vector<double>{3, 7});
  CHECK(conv1d(x4, Tensor::from({3, 1, 1}, {1, 1, 1}), 2, 1).dim(0) == 2);
  CHECK_THROWS_AS(conv1d(x, Tensor::from({5, 1, 1}, {1, 1, 1, 1, 1}), 1, 0), ShapeError);
}

TEST_CASE("depthwise causal conv only looks backwards") {
  const Tensor x = Tensor::from({3, 1}, {1, 2, 3});
  const Tensor k = Tensor::from({2, 1}, {10, 1});
  CHECK(values(depthwise_causal_conv1d(x, k)) == std::vector<double>{1, 12, 23});
}

TEST_CASE("layer_norm examples") {
  const Tensor ones = Tensor::full({3}, 1.0), zeros = Tensor::zeros({3});
  const Tensor c = layer_norm(Tensor::from({1, 3}, {5, 5, 5}), ones, zeros, 1e-5);
  for (double v : c.data()) CHECK(v == 0.0);
  const Tensor r = layer_norm(Tensor::from({1, 2}, {1, 3}), Tensor::full({2}, 1.0), Tensor::zeros({2}), 1e-12);
  CHECK(r[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(r[1] == doctest::Approx(1.0).epsilon(1e-9));

  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({6, 16}, rng, -5.0, 5.0);
  const Tensor y = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}), 1e-5);
  for (std::size_t row = 0; row < 6; ++row) {
    double m = 0.0;
    for (std::size_t c2 = 0; c2 < 16; ++c2) m += y.at(row, c2);
    CHECK(std::abs(m / 16.0) < 1e-12);
  }
}

TEST_CASE("softmax cross entropy examples and errors") {
  const std::vector<int> t2{2};
  CHECK(softmax_cross_entropy(Tensor::zeros({1, 4}), t2, -1).item() == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(softmax_cross_entropy(Tensor::from({1, 4}, {0, 0, 1e6, 0}), t2, -1).item() < 1e-12);
  const std::vector<int> ignored{3, 3};
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor::zeros({2, 4}), ignored, 3), ContractError);
  const std::vector<int> bad{4};
  CHECK_THROWS_AS(softmax_cross_entropy(Tensor::zeros({1, 4}), bad, -1), ContractError);
  const std::vector<int> mixed{1, 3};
  CHECK(softmax_cross_entropy(Tensor::zeros({2, 4}), mixed, 3).item() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("backward examples") {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::from({2}, {1, 2}, true);
  backward(sum(x));
  CHECK(values(Tensor::from({2}, {x.grad()[0], x.grad()[1]})) == std::vector<double>{1, 1});
  x.zero_grad();
  tape.clear();
  backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
}

TEST_CASE("backward rejects non-scalar and off-tape losses") {
  Tape tape;
  TapeScope scope(tape);
  const Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor y = scale(x, 2.0);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
  CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), ContractError);
}

TEST_CASE("gradients accumulate across backward passes on linear graphs") {
  Tensor x = Tensor::from({3}, {1, -2, 3}, true);
  const Tensor w = Tensor::from({3}, {0.5, 2, -1});
  std::vector<double> once;
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(x, w)));
    once.assign(x.grad().begin(), x.grad().end());
  }
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(x, w)));
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * once[i]);
}

TEST_CASE("no-grad scope records nothing") {
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradScope ng;
    (void)add(Tensor::from({1}, {1}, true), Tensor::from({1}, {2}, true));
  }
  CHECK(tape.size() == 0);
}

TEST_CASE("non-finite results raise numeric errors") {
  CHECK_THROWS_AS(exp(Tensor::scalar(1e6)), NumericError);
}

TEST_CASE("grad_check trivial oracles") {
  const double pow2_eps = std::ldexp(1.0, -17);
  CHECK(grad_check([](const Tensor& x) { return sum(x); }, Tensor::from({3}, {1, 2, 3}), pow2_eps) < 1e-12);
  CHECK(grad_check([](const Tensor& x) { return sum(exp(x)); }, Tensor::from({1}, {0}), 1e-5) < 1e-8);
  CHECK_THROWS_AS(grad_check([](const Tensor& x) { return sum(x); }, Tensor::scalar(1.0), 1e-2), ContractError);
  CHECK_THROWS_AS(grad_check([](const Tensor& x) { return sum(x); }, Tensor::scalar(1.0), 1e-9), ContractError);
}

TEST_CASE("every differentiable op passes grad_check over ten seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    const Tensor a = random_tensor({3, 4}, rng);
    const Tensor b = random_tensor({3, 4}, rng);
    const Tensor row = random_tensor({1, 4}, rng);
    const Tensor w = random_tensor({4, 2}, rng);
    const double eps = 1e-5;
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(add(x, b), b)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(sub(a, x), x)); }, row, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(x, x)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(x)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(sigmoid(x), b)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(silu(x), b)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(softplus(x), b)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return mean(mul(neg(scale(x, 3.0)), b)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(matmul(x, w), matmul(x, w))); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(matmul(a, x), matmul(a, x))); }, w, eps) < 1e-4);
    const Tensor a3 = random_tensor({2, 3, 4}, rng);
    const Tensor b3 = random_tensor({2, 4, 2}, rng);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(matmul(x, b3))); }, a3, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(matmul(a3, x))); }, b3, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(matmul(x, w))); }, a3, eps) < 1e-4);

    const Tensor seq = random_tensor({7, 3}, rng);
    const Tensor kernel = random_tensor({3, 3, 2}, rng);
    CHECK(grad_check([&](const Tensor& x) { return sum(silu(conv1d(x, kernel, 2, 1))); }, seq, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& k) { return sum(silu(conv1d(seq, k, 2, 1))); }, kernel, eps) < 1e-4);
    const Tensor dw = random_tensor({4, 3}, rng);
    CHECK(grad_check([&](const Tensor& x) { return sum(silu(depthwise_causal_conv1d(x, dw))); }, seq, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& k) { return sum(silu(depthwise_causal_conv1d(seq, k))); }, dw, eps) < 1e-4);

    const Tensor gain = random_tensor({4}, rng, 0.5, 1.5), bias = random_tensor({4}, rng);
    CHECK(grad_check([&](const Tensor& x) { return sum(mul(layer_norm(x, gain, bias, 1e-5), b)); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& g) { return sum(mul(layer_norm(a, g, bias, 1e-5), b)); }, gain, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& bb) { return sum(mul(layer_norm(a, gain, bb, 1e-5), b)); }, bias, eps) < 1e-4);

    const std::vector<int> targets{1, 3, 0};
    CHECK(grad_check([&](const Tensor& x) { return softmax_cross_entropy(x, targets, 3); }, a, eps) < 1e-5);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(slice_rows(x, 1, 3))); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(slice_cols(x, 1, 3))); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(concat_rows(x, b))); }, a, eps) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(concat_rows(b, x))); }, a, eps) < 1e-4);
    const std::vector<int> ids{2, 0, 2};
    CHECK(grad_check([&](const Tensor& x) { return sum(exp(embedding(x, ids))); }, a, eps) < 1e-4);
  }
}

TEST_CASE("composite MLP gradient matches finite differences") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({5, 3}, rng);
  Tensor w1 = random_tensor({3, 8}, rng), b1 = random_tensor({8}, rng);
  Tensor w2 = random_tensor({8, 4}, rng), b2 = random_tensor({4}, rng);
  const std::vector<int> targets{0, 1, 2, 3, 1};
  const double err = grad_check_params(
      [&]() { return softmax_cross_entropy(add(matmul(silu(add(matmul(x, w1), b1)), w2), b2), targets, -1); },
      {x, w1, b1, w2, b2}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("embedding rejects out-of-range ids") {
  const std::vector<int> ids{5};
  CHECK_THROWS_AS(embedding(Tensor::zeros({4, 2}), ids), VocabError);
}

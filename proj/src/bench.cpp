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

#include "ssm_asr/bench.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/scan.hpp"
#include "ssm_asr/tensor.hpp"

namespace ssm_asr {

double fit_power_law(std::span<const double> lengths, std::span<const double> times) {
  if (lengths.size() != times.size() || lengths.size() < 2) {
    throw ContractError("fit_power_law: need at least two matching points");
  }
  const auto n = static_cast<double>(lengths.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (!(lengths[i] > 0.0) || !(times[i] > 0.0)) throw ContractError("fit_power_law: values must be positive");
    const double x = std::log(lengths[i]);
    const double y = std::log(times[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw ContractError("fit_power_law: degenerate lengths");
  return (n * sxy - sx * sy) / denom;
}

BenchResult bench_scan(std::span<const std::size_t> lengths, std::size_t d_model, std::size_t d_state,
                       std::size_t repeats, std::uint64_t seed) {
  if (lengths.size() < 2) throw ContractError("bench_scan: need at least two lengths");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] == 0 || (i > 0 && lengths[i] <= lengths[i - 1])) {
      throw ContractError("bench_scan: lengths must be positive and strictly increasing");
    }
  }
  if (d_model == 0 || d_state == 0 || repeats == 0) throw ContractError("bench_scan: sizes must be positive");

  NoGradScope no_grad;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  BenchResult result;
  std::vector<double> xs, ts;
  for (const std::size_t T : lengths) {
    std::vector<double> a(T * d_model * d_state), b(a.size()), c(T * d_state), x(T * d_model), d(d_model, 1.0);
    for (double& v : a) v = 0.5 + 0.5 * unit(rng);
    for (double& v : b) v = 0.1 * normal(rng);
    for (double& v : c) v = normal(rng);
    for (double& v : x) v = normal(rng);
    const Tensor ta = Tensor::from({T, d_model, d_state}, a);
    const Tensor tb = Tensor::from({T, d_model, d_state}, b);
    const Tensor tc = Tensor::from({T, d_state}, c);
    const Tensor tx = Tensor::from({T, d_model}, x);
    const Tensor td = Tensor::from({d_model}, d);

    (void)scan_parallel(ta, tb, tc, tx, td);
    double total_ms = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const Tensor y = scan_parallel(ta, tb, tc, tx, td);
      const auto stop = std::chrono::steady_clock::now();
      (void)y;
      total_ms += std::chrono::duration<double, std::milli>(stop - start).count();
    }
    const double mean_ms = total_ms / static_cast<double>(repeats);
    result.rows.push_back({T, mean_ms});
    xs.push_back(static_cast<double>(T));
    ts.push_back(mean_ms);
  }
  result.exponent = fit_power_law(xs, ts);
  return result;
}

std::string format_bench_tsv(const BenchResult& result) {
  std::ostringstream out;
  out << "length\tmean_ms\n";
  for (const auto& row : result.rows) out << row.length << '\t' << row.mean_ms << '\n';
  out << "exponent\t" << result.exponent << '\n';
  return out.str();
}

}  // namespace ssm_asr

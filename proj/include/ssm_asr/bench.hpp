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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ssm_asr {

struct BenchRow {
  std::size_t length = 0;
  double mean_ms = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double exponent = 0.0;
};

// Least-squares slope of log(time) against log(length).
double fit_power_law(std::span<const double> lengths, std::span<const double> times);

// Times the parallel scan forward pass at each length with random inputs.
// Lengths must be strictly increasing with at least two entries.
BenchResult bench_scan(std::span<const std::size_t> lengths, std::size_t d_model = 64, std::size_t d_state = 16,
                       std::size_t repeats = 3, std::uint64_t seed = 0);

std::string format_bench_tsv(const BenchResult& result);

}  // namespace ssm_asr

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
#include <string>
#include <string_view>
#include <vector>

namespace ssm_asr {

// Lowercases, replaces ASCII punctuation with nothing, and splits on whitespace.
std::vector<std::string> normalize_words(std::string_view text);

// Unit-cost Levenshtein distance over word sequences.
std::size_t edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

struct WerCounts {
  std::size_t edits = 0;
  std::size_t ref_words = 0;
};

WerCounts wer_counts(std::string_view reference, std::string_view hypothesis);

// edits / max(1, reference word count), after normalization.
double wer(std::string_view reference, std::string_view hypothesis);

}  // namespace ssm_asr

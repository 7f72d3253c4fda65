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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ssm_asr {

using TokenId = int;
using TokenSequence = std::vector<TokenId>;

// Byte-level BPE vocabulary. Ids are dense: 0..255 are raw bytes, the next
// M ids are merges in training order, and the four specials follow.
class Vocab {
 public:
  static constexpr int kByteCount = 256;
  static constexpr int kSpecialCount = 4;

  Vocab() : Vocab(std::vector<std::pair<TokenId, TokenId>>{}) {}
  explicit Vocab(std::vector<std::pair<TokenId, TokenId>> merges);

  const std::vector<std::pair<TokenId, TokenId>>& merges() const { return merges_; }
  int size() const { return kByteCount + static_cast<int>(merges_.size()) + kSpecialCount; }

  TokenId pad() const { return first_special(); }
  TokenId sot() const { return first_special() + 1; }
  TokenId eot() const { return first_special() + 2; }
  TokenId transcribe() const { return first_special() + 3; }
  bool is_special(TokenId id) const { return id >= first_special() && id < size(); }

  // Bytes spelled by a non-special id.
  const std::string& bytes(TokenId id) const;

  // Header line "bpe <bytes> <merges> <specials>", then one "<left> <right>" line per merge.
  std::string serialize() const;
  static Vocab parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  // FNV-1a 64 of serialize(); identifies the vocabulary inside checkpoints.
  std::uint64_t hash() const;

 private:
  TokenId first_special() const { return kByteCount + static_cast<int>(merges_.size()); }

  std::vector<std::pair<TokenId, TokenId>> merges_;
  std::vector<std::string> spellings_;
};

// Greedy merge training. Each round merges the most frequent adjacent pair
// (ties: lower first id, then lower second id); stops after
// target_vocab - 256 - 4 merges or once no pair occurs at least twice.
Vocab train_bpe(std::span<const std::string> corpus, int target_vocab);

// Applies merges in training order. With `wrap`, the result is
// [SOT, TRANSCRIBE] + ids + [EOT].
TokenSequence encode(std::string_view text, const Vocab& vocab, bool wrap);

// Drops specials and expands every other id to its bytes.
std::string decode(std::span<const TokenId> ids, const Vocab& vocab);

}  // namespace ssm_asr

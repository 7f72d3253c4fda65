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

#include "ssm_asr/bpe.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

namespace {

using Pair = std::pair<TokenId, TokenId>;

// Replaces every non-overlapping occurrence of `pair`, scanning left to right.
void apply_merge(std::vector<TokenId>& seq, const Pair& pair, TokenId merged) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < seq.size(); ++r) {
    if (r + 1 < seq.size() && seq[r] == pair.first && seq[r + 1] == pair.second) {
      seq[w++] = merged;
      ++r;
    } else {
      seq[w++] = seq[r];
    }
  }
  seq.resize(w);
}

}  // namespace

Vocab::Vocab(std::vector<std::pair<TokenId, TokenId>> merges) : merges_(std::move(merges)) {
  spellings_.reserve(kByteCount + merges_.size());
  for (int b = 0; b < kByteCount; ++b) spellings_.emplace_back(1, static_cast<char>(b));
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const auto [left, right] = merges_[i];
    const TokenId limit = kByteCount + static_cast<TokenId>(i);
    if (left < 0 || right < 0 || left >= limit || right >= limit) {
      throw VocabError("merge " + std::to_string(i) + " references an undefined id");
    }
    spellings_.push_back(spellings_[left] + spellings_[right]);
  }
}

const std::string& Vocab::bytes(TokenId id) const {
  if (id < 0 || id >= first_special()) {
    throw VocabError("id " + std::to_string(id) + " has no byte spelling");
  }
  return spellings_[id];
}

std::string Vocab::serialize() const {
  std::ostringstream os;
  os << "bpe " << kByteCount << ' ' << merges_.size() << ' ' << kSpecialCount << '\n';
  for (const auto& [l, r] : merges_) os << l << ' ' << r << '\n';
  return os.str();
}

Vocab Vocab::parse(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string tag;
  long bytes = 0;
  long count = 0;
  long specials = 0;
  if (!(is >> tag >> bytes >> count >> specials) || tag != "bpe" || bytes != kByteCount ||
      specials != kSpecialCount || count < 0) {
    throw VocabError("malformed vocabulary header");
  }
  std::vector<Pair> merges;
  merges.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    TokenId l = 0;
    TokenId r = 0;
    if (!(is >> l >> r)) throw VocabError("vocabulary truncated at merge " + std::to_string(i));
    merges.emplace_back(l, r);
  }
  return Vocab(std::move(merges));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  out << serialize();
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Vocab train_bpe(std::span<const std::string> corpus, int target_vocab) {
  if (corpus.empty()) throw ConfigError("train_bpe: empty corpus");
  if (target_vocab < Vocab::kByteCount + Vocab::kSpecialCount) {
    throw ConfigError("train_bpe: target_vocab must be at least 260");
  }
  const int max_merges = target_vocab - Vocab::kByteCount - Vocab::kSpecialCount;

  std::vector<std::vector<TokenId>> seqs;
  seqs.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::vector<TokenId> ids;
    ids.reserve(s.size());
    for (unsigned char c : s) ids.push_back(c);
    seqs.push_back(std::move(ids));
  }

  std::vector<Pair> merges;
  while (static_cast<int>(merges.size()) < max_merges) {
    std::map<Pair, long> counts;
    for (const auto& seq : seqs) {
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) ++counts[{seq[i], seq[i + 1]}];
    }
    // std::map iterates in (first, second) order, so the first strict
    // maximum is the tie-break winner.
    const Pair* best = nullptr;
    long best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < 2) break;
    const Pair chosen = *best;
    const TokenId id = Vocab::kByteCount + static_cast<TokenId>(merges.size());
    merges.push_back(chosen);
    for (auto& seq : seqs) apply_merge(seq, chosen, id);
  }
  return Vocab(std::move(merges));
}

TokenSequence encode(std::string_view text, const Vocab& vocab, bool wrap) {
  TokenSequence ids;
  ids.reserve(text.size() + 3);
  for (unsigned char c : text) ids.push_back(c);
  const auto& merges = vocab.merges();
  for (std::size_t i = 0; i < merges.size() && ids.size() > 1; ++i) {
    apply_merge(ids, merges[i], Vocab::kByteCount + static_cast<TokenId>(i));
  }
  if (wrap) {
    ids.insert(ids.begin(), {vocab.sot(), vocab.transcribe()});
    ids.push_back(vocab.eot());
  }
  return ids;
}

std::string decode(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || id >= vocab.size()) throw VocabError("invalid token id " + std::to_string(id));
    if (vocab.is_special(id)) continue;
    out += vocab.bytes(id);
  }
  return out;
}

}  // namespace ssm_asr

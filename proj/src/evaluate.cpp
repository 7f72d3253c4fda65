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

#include "ssm_asr/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ssm_asr/errors.hpp"
#include "ssm_asr/wer.hpp"

namespace ssm_asr {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void check_vocab(const Model& model, const Vocab& vocab) {
  if (static_cast<std::size_t>(vocab.size()) != model.config().vocab_size) {
    throw VocabError("vocabulary has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                     std::to_string(model.config().vocab_size));
  }
}

void check_vocab(const LoadedCheckpoint& ckpt, const Vocab& vocab) {
  if (ckpt.vocab_hash != vocab.hash()) throw VocabError("vocabulary hash does not match the checkpoint");
  check_vocab(ckpt.model, vocab);
}

std::string transcribe(const MelSpectrogram& mel, const Model& model, const Vocab& vocab) {
  const TokenSequence ids = greedy_decode(mel, model, model.config().max_text_len);
  return decode(ids, vocab);
}

std::string transcribe(const Waveform& wave, const Model& model, const Vocab& vocab, const FrontendConfig& frontend) {
  return transcribe(featurize(wave, frontend), model, vocab);
}

double pooled_wer(const std::vector<EvalRow>& rows) {
  std::size_t edits = 0, words = 0;
  for (const auto& r : rows) {
    edits += r.edits;
    words += r.ref_words;
  }
  return static_cast<double>(edits) / static_cast<double>(std::max<std::size_t>(1, words));
}

EvalReport evaluate(const std::vector<ManifestEntry>& entries, const std::filesystem::path& manifest_path,
                    const Model& model, const Vocab& vocab, const FrontendConfig& frontend) {
  check_vocab(model, vocab);
  EvalReport report;
  for (const auto& entry : entries) {
    const auto audio = resolve_audio(manifest_path, entry);
    if (!std::filesystem::exists(audio)) {
      report.skipped.push_back(entry.audio);
      continue;
    }
    EvalRow row;
    row.audio = entry.audio;
    row.ref = entry.text;
    row.hyp = transcribe(featurize_file(audio, frontend), model, vocab);
    const WerCounts counts = wer_counts(row.ref, row.hyp);
    row.edits = counts.edits;
    row.ref_words = counts.ref_words;
    row.wer = static_cast<double>(counts.edits) / static_cast<double>(std::max<std::size_t>(1, counts.ref_words));
    report.edits += row.edits;
    report.ref_words += row.ref_words;
    report.rows.push_back(std::move(row));
  }
  report.corpus_wer = pooled_wer(report.rows);
  return report;
}

EvalReport evaluate(const std::filesystem::path& manifest_path, const LoadedCheckpoint& ckpt, const Vocab& vocab) {
  check_vocab(ckpt, vocab);
  return evaluate(read_manifest(manifest_path), manifest_path, ckpt.model, vocab, ckpt.frontend);
}

std::string format_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << "audio,ref,hyp,wer\n";
  for (const auto& r : report.rows) {
    out << csv_field(r.audio) << ',' << csv_field(r.ref) << ',' << csv_field(r.hyp) << ',' << r.wer << '\n';
  }
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_report_csv(report);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ssm_asr

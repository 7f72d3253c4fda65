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

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssm_asr/bench.hpp"
#include "ssm_asr/bpe.hpp"
#include "ssm_asr/checkpoint.hpp"
#include "ssm_asr/config.hpp"
#include "ssm_asr/errors.hpp"
#include "ssm_asr/evaluate.hpp"
#include "ssm_asr/manifest.hpp"
#include "ssm_asr/synth.hpp"
#include "ssm_asr/trainer.hpp"

namespace {

using namespace ssm_asr;

int run_synth(const std::string& out, const SynthSpec& spec) {
  const SynthCorpus corpus = synth_corpus(spec, out);
  std::cout << "wrote " << corpus.train.size() << " train, " << corpus.val.size() << " val, " << corpus.test.size()
            << " test utterances to " << out << "\n";
  return 0;
}

int run_bpe_train(const std::string& manifest, int vocab_size, const std::string& out) {
  std::vector<std::string> texts;
  for (const auto& e : read_manifest(manifest)) texts.push_back(e.text);
  const Vocab vocab = train_bpe(texts, vocab_size);
  vocab.save(out);
  std::cout << "vocab size " << vocab.size() << " (" << vocab.merges().size() << " merges) -> " << out << "\n";
  return 0;
}

int run_train(const std::string& config, const std::string& manifest, const std::string& val_manifest,
              const std::string& vocab_path, const std::string& out) {
  RunConfig cfg = load_run_config(config);
  const Vocab vocab = Vocab::load(vocab_path);
  if (cfg.model.vocab_size != static_cast<std::size_t>(vocab.size())) {
    std::cerr << "note: model.vocab_size set to " << vocab.size() << " to match " << vocab_path << "\n";
    cfg.model.vocab_size = static_cast<std::size_t>(vocab.size());
  }
  cfg.model.validate();
  const auto train = load_utterances(manifest, vocab, cfg.frontend, cfg.model.max_text_len);
  const std::vector<Utterance> val =
      val_manifest.empty() ? std::vector<Utterance>{}
                           : load_utterances(val_manifest, vocab, cfg.frontend, cfg.model.max_text_len);
  const Model model(cfg.model, cfg.train.seed);
  TrainLoopOptions options;
  options.out_dir = out;
  options.on_epoch = [](const MetricsRow& row) {
    std::cerr << "epoch " << row.epoch << " step " << row.step << " train_loss " << row.train_loss << " val_loss "
              << row.val_loss << " wer " << row.wer << "\n";
  };
  const TrainResult result = train_loop(model, train, val, cfg.train, cfg.frontend, vocab, options);
  std::cout << "trained " << result.steps << " steps; best WER " << result.best_wer << "; checkpoints in " << out
            << "\n";
  return 0;
}

int run_transcribe(const std::string& ckpt_path, const std::string& vocab_path, const std::string& audio) {
  const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const Vocab vocab = Vocab::load(vocab_path);
  check_vocab(ckpt, vocab);
  std::cout << transcribe(featurize_file(audio, ckpt.frontend), ckpt.model, vocab) << "\n";
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& vocab_path, const std::string& manifest,
             const std::string& report_path) {
  const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const Vocab vocab = Vocab::load(vocab_path);
  const EvalReport report = evaluate(manifest, ckpt, vocab);
  write_report_csv(report_path, report);
  std::cout << "WER " << report.corpus_wer << " (" << report.edits << "/" << report.ref_words << " words, "
            << report.rows.size() << " utterances)\n";
  for (const auto& s : report.skipped) std::cerr << "skipped missing audio: " << s << "\n";
  return report.skipped.empty() ? 0 : 1;
}

int run_bench(const std::vector<std::size_t>& lengths, std::size_t d_model, std::size_t d_state,
              std::size_t repeats) {
  std::cout << format_bench_tsv(bench_scan(lengths, d_model, d_state, repeats));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective state-space speech recognizer"};
  app.require_subcommand(1);

  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic spoken-digit tone corpus");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", spec.n_utterances, "Number of utterances");
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--noise", spec.noise_amplitude, "Gaussian noise standard deviation");
  synth->add_option("--min-digits", spec.min_digits, "Minimum digits per utterance");
  synth->add_option("--max-digits", spec.max_digits, "Maximum digits per utterance");

  std::string bpe_manifest, bpe_out;
  int bpe_size = 516;
  auto* bpe = app.add_subcommand("bpe-train", "Train a byte-level BPE vocabulary on manifest transcripts");
  bpe->add_option("--manifest", bpe_manifest, "Manifest (JSON Lines)")->required();
  bpe->add_option("--vocab-size", bpe_size, "Target vocabulary size including special tokens");
  bpe->add_option("--out", bpe_out, "Vocabulary file")->required();

  std::string train_config, train_manifest, train_val, train_vocab, train_out;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", train_config, "Run configuration (JSON)")->required();
  train->add_option("--manifest", train_manifest, "Training manifest")->required();
  train->add_option("--val-manifest", train_val, "Validation manifest");
  train->add_option("--vocab", train_vocab, "Vocabulary file")->required();
  train->add_option("--out", train_out, "Output directory")->required();

  std::string tr_ckpt, tr_vocab, tr_audio;
  auto* trans = app.add_subcommand("transcribe", "Transcribe one WAV file");
  trans->add_option("--ckpt", tr_ckpt, "Checkpoint")->required();
  trans->add_option("--vocab", tr_vocab, "Vocabulary file")->required();
  trans->add_option("--audio", tr_audio, "WAV file")->required();

  std::string ev_ckpt, ev_vocab, ev_manifest, ev_report = "report.csv";
  auto* ev = app.add_subcommand("eval", "Compute pooled WER over a manifest");
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--vocab", ev_vocab, "Vocabulary file")->required();
  ev->add_option("--manifest", ev_manifest, "Manifest (JSON Lines)")->required();
  ev->add_option("--report", ev_report, "Per-utterance report CSV");

  std::vector<std::size_t> lengths{256, 512, 1024, 2048, 4096};
  std::size_t bench_d_model = 64, bench_d_state = 16, bench_repeats = 3;
  auto* bench = app.add_subcommand("bench", "Time the parallel scan over sequence lengths");
  bench->add_option("--lengths", lengths, "Comma-separated sequence lengths")->delimiter(',');
  bench->add_option("--d-model", bench_d_model, "Channels");
  bench->add_option("--d-state", bench_d_state, "State size");
  bench->add_option("--repeats", bench_repeats, "Timed repetitions per length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return run_synth(synth_out, spec);
    if (*bpe) return run_bpe_train(bpe_manifest, bpe_size, bpe_out);
    if (*train) return run_train(train_config, train_manifest, train_val, train_vocab, train_out);
    if (*trans) return run_transcribe(tr_ckpt, tr_vocab, tr_audio);
    if (*ev) return run_eval(ev_ckpt, ev_vocab, ev_manifest, ev_report);
    if (*bench) return run_bench(lengths, bench_d_model, bench_d_state, bench_repeats);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

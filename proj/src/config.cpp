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

#include "ssm_asr/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ssm_asr/errors.hpp"

namespace ssm_asr {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& section, const char* key, T& out, const std::string& where) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& section, std::initializer_list<const char*> known, const std::string& where) {
  if (!section.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : section.items()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw ConfigError("unknown key " + where + "." + key);
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"model", "train", "frontend"}, "config");

  RunConfig cfg;
  if (root.contains("model")) {
    const json& m = root["model"];
    reject_unknown(m,
                   {"d_model", "n_encoder_layers", "n_decoder_layers", "d_state", "d_inner", "conv_kernel",
                    "vocab_size", "max_text_len", "n_mels", "use_skip", "scan_mode"},
                   "model");
    read_field(m, "d_model", cfg.model.d_model, "model");
    read_field(m, "n_encoder_layers", cfg.model.n_encoder_layers, "model");
    read_field(m, "n_decoder_layers", cfg.model.n_decoder_layers, "model");
    read_field(m, "d_state", cfg.model.d_state, "model");
    read_field(m, "d_inner", cfg.model.d_inner, "model");
    read_field(m, "conv_kernel", cfg.model.conv_kernel, "model");
    read_field(m, "vocab_size", cfg.model.vocab_size, "model");
    read_field(m, "max_text_len", cfg.model.max_text_len, "model");
    read_field(m, "n_mels", cfg.model.n_mels, "model");
    read_field(m, "use_skip", cfg.model.use_skip, "model");
    if (m.contains("scan_mode")) {
      std::string mode;
      read_field(m, "scan_mode", mode, "model");
      if (mode == "parallel") {
        cfg.model.scan_mode = ScanMode::kParallel;
      } else if (mode == "sequential") {
        cfg.model.scan_mode = ScanMode::kSequential;
      } else {
        throw ConfigError("model.scan_mode must be \"parallel\" or \"sequential\"");
      }
    }
  }
  if (root.contains("train")) {
    const json& t = root["train"];
    reject_unknown(t, {"lr0", "weight_decay", "adam_eps", "beta1", "beta2", "batch_size", "epochs", "clip_norm", "seed"},
                   "train");
    read_field(t, "lr0", cfg.train.lr0, "train");
    read_field(t, "weight_decay", cfg.train.weight_decay, "train");
    read_field(t, "adam_eps", cfg.train.adam_eps, "train");
    read_field(t, "beta1", cfg.train.beta1, "train");
    read_field(t, "beta2", cfg.train.beta2, "train");
    read_field(t, "batch_size", cfg.train.batch_size, "train");
    read_field(t, "epochs", cfg.train.epochs, "train");
    read_field(t, "clip_norm", cfg.train.clip_norm, "train");
    read_field(t, "seed", cfg.train.seed, "train");
  }
  if (root.contains("frontend")) {
    const json& f = root["frontend"];
    reject_unknown(f, {"sample_rate", "win_samples", "hop_samples", "n_fft", "n_mels", "target_samples", "log_floor"},
                   "frontend");
    read_field(f, "sample_rate", cfg.frontend.sample_rate, "frontend");
    read_field(f, "win_samples", cfg.frontend.win_samples, "frontend");
    read_field(f, "hop_samples", cfg.frontend.hop_samples, "frontend");
    read_field(f, "n_fft", cfg.frontend.n_fft, "frontend");
    read_field(f, "n_mels", cfg.frontend.n_mels, "frontend");
    read_field(f, "target_samples", cfg.frontend.target_samples, "frontend");
    read_field(f, "log_floor", cfg.frontend.log_floor, "frontend");
  }
  if (cfg.frontend.n_mels != cfg.model.n_mels) throw ConfigError("frontend.n_mels must equal model.n_mels");
  cfg.frontend.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  nlohmann::ordered_json root;
  root["model"] = {{"d_model", cfg.model.d_model},
                   {"n_encoder_layers", cfg.model.n_encoder_layers},
                   {"n_decoder_layers", cfg.model.n_decoder_layers},
                   {"d_state", cfg.model.d_state},
                   {"d_inner", cfg.model.d_inner},
                   {"conv_kernel", cfg.model.conv_kernel},
                   {"vocab_size", cfg.model.vocab_size},
                   {"max_text_len", cfg.model.max_text_len},
                   {"n_mels", cfg.model.n_mels},
                   {"use_skip", cfg.model.use_skip},
                   {"scan_mode", cfg.model.scan_mode == ScanMode::kParallel ? "parallel" : "sequential"}};
  root["train"] = {{"lr0", cfg.train.lr0},           {"weight_decay", cfg.train.weight_decay},
                   {"adam_eps", cfg.train.adam_eps}, {"beta1", cfg.train.beta1},
                   {"beta2", cfg.train.beta2},       {"batch_size", cfg.train.batch_size},
                   {"epochs", cfg.train.epochs},     {"clip_norm", cfg.train.clip_norm},
                   {"seed", cfg.train.seed}};
  root["frontend"] = {{"sample_rate", cfg.frontend.sample_rate}, {"win_samples", cfg.frontend.win_samples},
                      {"hop_samples", cfg.frontend.hop_samples}, {"n_fft", cfg.frontend.n_fft},
                      {"n_mels", cfg.frontend.n_mels},           {"target_samples", cfg.frontend.target_samples},
                      {"log_floor", cfg.frontend.log_floor}};
  return root.dump(2) + "\n";
}

}  // namespace ssm_asr

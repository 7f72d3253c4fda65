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

#include <filesystem>
#include <string>
#include <string_view>

#include "ssm_asr/frontend.hpp"
#include "ssm_asr/model.hpp"
#include "ssm_asr/optim.hpp"

namespace ssm_asr {

// JSON object with optional "model", "train" and "frontend" sections; absent
// keys keep their defaults, unknown keys are rejected.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  FrontendConfig frontend;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace ssm_asr

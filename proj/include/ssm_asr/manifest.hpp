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
#include <vector>

namespace ssm_asr {

struct ManifestEntry {
  std::string audio;  // relative to the manifest's directory unless absolute
  std::string text;
};

// JSON Lines: one {"audio": ..., "text": ...} object per line. Blank lines
// are skipped.
std::vector<ManifestEntry> parse_manifest(std::string_view content);
std::string serialize_manifest(const std::vector<ManifestEntry>& entries);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

std::filesystem::path resolve_audio(const std::filesystem::path& manifest_path, const ManifestEntry& entry);

}  // namespace ssm_asr

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

#include "ssm_asr/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ssm_asr/errors.hpp"

namespace ssm_asr {

std::vector<ManifestEntry> parse_manifest(std::string_view content) {
  std::vector<ManifestEntry> entries;
  std::istringstream is{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      entries.push_back({j.at("audio").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return entries;
}

std::string serialize_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["audio"] = e.audio;
    j["text"] = e.text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << serialize_manifest(entries);
}

std::filesystem::path resolve_audio(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
  const std::filesystem::path audio(entry.audio);
  if (audio.is_absolute()) return audio;
  return manifest_path.parent_path() / audio;
}

}  // namespace ssm_asr

// Copyright 2026 The morphinf Authors.
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

// Run manifests: a flat key=value record of a command's resolved settings,
// input digests and timing.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace morphinf {

inline constexpr const char* kToolVersion = "1.0.0";

/// Lowercase hex SHA-256 of a file's bytes. Throws std::runtime_error when
/// the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

class RunManifest {
 public:
  void set(const std::string& key, const std::string& value);
  /// Records the path and digest of an input under input.<name>.
  void add_input(const std::string& name, const std::filesystem::path& path);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;

  /// Keys in insertion order.
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

}  // namespace morphinf

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

// Checkpoint container.
//
//   MORPHINF-CHECKPOINT 1\n
//   <header byte count>\n
//   <JSON header: hidden size, vocabularies in id order, model layout
//    flags, seed, parameter names and shapes>
//   then per parameter, in header order:
//     u32 name length, name bytes, u32 rank, u32 dims[rank],
//     row-major float32 values
//
// All integers and floats are little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "morphinf/data.hpp"
#include "morphinf/model.hpp"

namespace morphinf {

inline constexpr const char* kCheckpointMagic = "MORPHINF-CHECKPOINT 1";

/// Model layout conventions recorded in every header.
std::map<std::string, std::string> layout_flags();

struct Checkpoint {
  InflectionModel<float> model;
  Vocabularies vocabs;
  std::uint64_t seed = 0;
};

/// Writes via a temporary file and rename. Throws std::runtime_error on I/O
/// failure.
void save_checkpoint(const std::filesystem::path& path, const InflectionModel<float>& model,
                     const Vocabularies& vocabs, std::uint64_t seed);

/// Throws std::runtime_error on unreadable or inconsistent files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace morphinf

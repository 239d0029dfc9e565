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

#pragma once

#include <string>
#include <string_view>

namespace morphinf {

/// Decodes UTF-8 and applies NFC normalization. Throws std::invalid_argument
/// on malformed UTF-8.
std::u32string nfc_codepoints(std::string_view utf8);

std::string to_utf8(std::u32string_view text);

}  // namespace morphinf

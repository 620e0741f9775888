// Copyright 2026 svslab authors
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
#include <vector>

namespace svs {

// Character-level symbol inventory for the text front end.
//
// id 0: silence (also used to pad utterance boundaries)
// id 1: word boundary (whitespace)
// then: a-z, 0-9, and the punctuation set . , ! ? ' -
inline constexpr int kSilenceId = 0;
inline constexpr int kBoundaryId = 1;

int vocab_size();  // 44

// Maps one character to its symbol id. Uppercase letters fold to lowercase.
// Throws UnknownSymbol for anything outside the inventory.
int symbol_id(char c);

// Encodes a text line as ids, wrapped in silence tokens on both ends.
// Runs of whitespace collapse to a single word boundary.
std::vector<int> encode_text(const std::string& text);

}  // namespace svs

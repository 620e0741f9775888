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

#include "svs/vocab.hpp"

#include <cctype>

#include "svs/error.hpp"

namespace svs {

namespace {
constexpr char kPunct[] = ".,!?'-";
}

int vocab_size() { return 2 + 26 + 10 + 6; }

int symbol_id(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  if (std::isspace(u)) return kBoundaryId;
  const char lc = static_cast<char>(std::tolower(u));
  if (lc >= 'a' && lc <= 'z') return 2 + (lc - 'a');
  if (lc >= '0' && lc <= '9') return 2 + 26 + (lc - '0');
  for (int i = 0; i < 6; ++i)
    if (lc == kPunct[i]) return 2 + 26 + 10 + i;
  fail(Err::UnknownSymbol, std::string("unknown text symbol '") + c + "'");
}

std::vector<int> encode_text(const std::string& text) {
  std::vector<int> ids;
  ids.reserve(text.size() + 2);
  ids.push_back(kSilenceId);
  bool in_space = true;  // swallow leading whitespace
  for (char c : text) {
    const int id = symbol_id(c);
    if (id == kBoundaryId) {
      if (!in_space) ids.push_back(kBoundaryId);
      in_space = true;
    } else {
      ids.push_back(id);
      in_space = false;
    }
  }
  if (ids.size() > 1 && ids.back() == kBoundaryId) ids.pop_back();
  ids.push_back(kSilenceId);
  return ids;
}

}  // namespace svs

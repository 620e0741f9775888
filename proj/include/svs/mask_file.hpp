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

#ifndef SVS_MASK_FILE_HPP
#define SVS_MASK_FILE_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

namespace svs {

// Ordered set of retained dimension indices over an original dimensionality.
// Indices are strictly increasing and all < original_dim.
//
// On disk (.ksm): magic "KSM1", uint32 original_dim, uint32 count,
// count x uint32 indices, everything little-endian.
struct SelectionMask {
  uint32_t original_dim = 0;
  std::vector<uint32_t> indices;

  // Throws Err::IndexOutOfRange / Err::DimMismatch on invariant violations.
  void validate() const;
};

SelectionMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const SelectionMask& mask);

}  // namespace svs

#endif  // SVS_MASK_FILE_HPP

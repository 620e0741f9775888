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

#include "svs/mask_file.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "svs/error.hpp"

namespace svs {

namespace {
constexpr char kMagic[4] = {'K', 'S', 'M', '1'};

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(static_cast<uint8_t>(v & 0xff));
  buf.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  buf.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  buf.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}
}  // namespace

void SelectionMask::validate() const {
  uint32_t prev = 0;
  bool first = true;
  for (uint32_t idx : indices) {
    if (idx >= original_dim)
      fail(Err::IndexOutOfRange,
           "mask index " + std::to_string(idx) + " >= original_dim " + std::to_string(original_dim));
    if (!first && idx <= prev)
      fail(Err::DimMismatch, "mask indices not strictly increasing at " + std::to_string(idx));
    prev = idx;
    first = false;
  }
}

SelectionMask read_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Err::BadMagic, "bad magic in " + path.string());
  SelectionMask m;
  m.original_dim = get_u32(bytes.data() + 4);
  const uint32_t count = get_u32(bytes.data() + 8);
  if (bytes.size() != 12 + 4 * static_cast<size_t>(count))
    fail(Err::TruncatedPayload, "mask payload size mismatch in " + path.string());
  m.indices.resize(count);
  for (uint32_t i = 0; i < count; ++i) m.indices[i] = get_u32(bytes.data() + 12 + 4 * i);
  m.validate();
  return m;
}

void write_mask(const std::filesystem::path& path, const SelectionMask& mask) {
  mask.validate();
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u32(buf, mask.original_dim);
  put_u32(buf, static_cast<uint32_t>(mask.indices.size()));
  for (uint32_t idx : mask.indices) put_u32(buf, idx);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(Err::IoFailure, "write failed on " + path.string());
}

}  // namespace svs

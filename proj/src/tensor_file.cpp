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

#include "svs/tensor_file.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "svs/error.hpp"

namespace svs {

namespace {

constexpr char kMagic[4] = {'K', 'S', 'E', '1'};

void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(static_cast<uint8_t>(v & 0xff));
  buf.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  buf.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  buf.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<uint8_t>& buf, float f) { put_u32(buf, std::bit_cast<uint32_t>(f)); }

float get_f32(const uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Err::IoFailure, "read failed on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Err::IoFailure, "write failed on " + path.string());
}

}  // namespace

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Err::BadMagic, "bad magic in " + path.string());
  const int rank = bytes[4];
  if (rank != 1 && rank != 2)
    fail(Err::UnsupportedRank, "unsupported rank " + std::to_string(rank) + " in " + path.string());
  const size_t header = 5 + 4 * static_cast<size_t>(rank);
  if (bytes.size() < header) fail(Err::TruncatedPayload, "truncated header in " + path.string());

  uint64_t count = 1;
  uint32_t shape[2] = {0, 0};
  for (int i = 0; i < rank; ++i) {
    shape[i] = get_u32(bytes.data() + 5 + 4 * i);
    count *= shape[i];
  }
  if (bytes.size() != header + 4 * count)
    fail(Err::TruncatedPayload, "payload size mismatch in " + path.string() + " (have " +
                                    std::to_string(bytes.size() - header) + " bytes, want " +
                                    std::to_string(4 * count) + ")");

  Tensor t;
  t.rank = rank;
  const uint8_t* p = bytes.data() + header;
  if (rank == 1) {
    t.vec.resize(static_cast<Eigen::Index>(shape[0]));
    for (uint32_t i = 0; i < shape[0]; ++i) t.vec(i) = get_f32(p + 4 * i);
  } else {
    t.mat.resize(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
    for (uint32_t r = 0; r < shape[0]; ++r)
      for (uint32_t c = 0; c < shape[1]; ++c)
        t.mat(r, c) = get_f32(p + 4 * (static_cast<uint64_t>(r) * shape[1] + c));
  }
  return t;
}

Mat read_matrix(const std::filesystem::path& path) {
  Tensor t = read_tensor(path);
  if (t.rank != 2) fail(Err::UnsupportedRank, "expected rank-2 tensor in " + path.string());
  return t.mat;
}

Vec read_vector(const std::filesystem::path& path) {
  Tensor t = read_tensor(path);
  if (t.rank != 1) fail(Err::UnsupportedRank, "expected rank-1 tensor in " + path.string());
  return t.vec;
}

void write_tensor(const std::filesystem::path& path, const Mat& m) {
  std::vector<uint8_t> buf;
  buf.reserve(13 + 4 * static_cast<size_t>(m.size()));
  buf.insert(buf.end(), kMagic, kMagic + 4);
  buf.push_back(2);
  put_u32(buf, static_cast<uint32_t>(m.rows()));
  put_u32(buf, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(buf, m(r, c));
  write_file(path, buf);
}

void write_tensor(const std::filesystem::path& path, const Vec& v) {
  std::vector<uint8_t> buf;
  buf.reserve(9 + 4 * static_cast<size_t>(v.size()));
  buf.insert(buf.end(), kMagic, kMagic + 4);
  buf.push_back(1);
  put_u32(buf, static_cast<uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(buf, v(i));
  write_file(path, buf);
}

}  // namespace svs

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

#include "svs/manifest.hpp"

#include <fstream>
#include <sstream>

#include "svs/error.hpp"
#include "svs/tensor_file.hpp"

namespace svs {

namespace {
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}
}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoFailure, "cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields[0] == "utt") {
      if (fields.size() != 6) fail(Err::ManifestError, where + ": utt record needs 6 fields");
      m.entries.push_back({fields[1], fields[2], fields[3], fields[4], fields[5]});
    } else if (fields[0] == "pair") {
      if (fields.size() != 4) fail(Err::ManifestError, where + ": pair record needs 4 fields");
      m.pairs.push_back({fields[1], fields[2], fields[3]});
    } else {
      fail(Err::ManifestError, where + ": unknown record type '" + fields[0] + "'");
    }
  }
  return m;
}

void validate_training_entries(const Manifest& m) {
  for (const auto& e : m.entries) {
    const auto mel_path = m.resolve(e.mel_path);
    Tensor mel = read_tensor(mel_path);
    if (mel.rank != 2 || mel.mat.cols() != 80)
      fail(Err::ManifestError, "mel " + mel_path.string() + " must be rank-2 with 80 columns");
    const auto pitch_path = m.resolve(e.pitch_path);
    Tensor pitch = read_tensor(pitch_path);
    if (pitch.rank != 1)
      fail(Err::ManifestError, "pitch " + pitch_path.string() + " must be rank-1");
    if (pitch.vec.size() != mel.mat.rows())
      fail(Err::ManifestError, "pitch " + pitch_path.string() + " has " +
                                   std::to_string(pitch.vec.size()) + " frames, mel has " +
                                   std::to_string(mel.mat.rows()));
    const auto emb_path = m.resolve(e.embedding_path);
    Tensor emb = read_tensor(emb_path);
    if (emb.rank != 2)
      fail(Err::ManifestError, "embedding " + emb_path.string() + " must be rank-2");
  }
}

void validate_pairs(const Manifest& m) {
  Eigen::Index dim = -1;
  for (const auto& p : m.pairs) {
    Tensor a = read_tensor(m.resolve(p.speech_path));
    Tensor b = read_tensor(m.resolve(p.singing_path));
    if (a.rank != 2 || b.rank != 2)
      fail(Err::ManifestError, "pair embeddings for " + p.speaker_id + " must be rank-2");
    if (a.mat.cols() != b.mat.cols())
      fail(Err::ManifestError, "pair for " + p.speaker_id + " mixes embedding widths " +
                                   std::to_string(a.mat.cols()) + " and " +
                                   std::to_string(b.mat.cols()));
    if (dim >= 0 && a.mat.cols() != dim)
      fail(Err::ManifestError, "pair for " + p.speaker_id + " has embedding width " +
                                   std::to_string(a.mat.cols()) + ", corpus uses " +
                                   std::to_string(dim));
    dim = a.mat.cols();
  }
}

}  // namespace svs

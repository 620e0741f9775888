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

#ifndef SVS_MANIFEST_HPP
#define SVS_MANIFEST_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace svs {

// Corpus manifests are line-delimited UTF-8, tab-separated, `#` comments and
// blank lines ignored. Two record kinds, tagged by their first field:
//
//   utt  <speaker_id> <text> <mel.kse> <pitch.kse> <embedding.kse>
//   pair <speaker_id> <speech_embedding.kse> <singing_embedding.kse>
//
// Paths are resolved relative to the manifest's directory.
struct UttEntry {
  std::string speaker_id;
  std::string text;
  std::string mel_path;
  std::string pitch_path;
  std::string embedding_path;
};

struct PairEntry {
  std::string speaker_id;
  std::string speech_path;
  std::string singing_path;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<UttEntry> entries;
  std::vector<PairEntry> pairs;

  std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }
};

Manifest read_manifest(const std::filesystem::path& path);

// Checks every referenced tensor: mel rank-2 with 80 columns, pitch rank-1
// with one value per mel frame, embeddings rank-2. Throws on the first
// offending entry.
void validate_training_entries(const Manifest& m);

// Checks that each pair's embeddings parse as rank-2 tensors of equal width
// and that all pairs share one embedding dimensionality.
void validate_pairs(const Manifest& m);

}  // namespace svs

#endif  // SVS_MANIFEST_HPP

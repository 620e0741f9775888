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

#ifndef SVS_DIM_SELECT_HPP
#define SVS_DIM_SELECT_HPP

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "svs/manifest.hpp"
#include "svs/mask_file.hpp"
#include "svs/tensor_file.hpp"

namespace svs {

using VecD = Eigen::VectorXd;

// Per-speaker absolute difference of time-averaged speech/singing embeddings.
struct PairDiff {
  std::string speaker_id;
  VecD diff;  // length D, all entries >= 0
};

struct SelectionReport {
  VecD medians;  // length D, per-dimension median of pair diffs
  VecD zscores;  // (medians - mean) / population std
  SelectionMask mask;
  double reduction_ratio = 0.0;  // 1 - |mask| / D
};

// Mean over frames of each embedding dimension. Throws EmptySequence.
VecD time_average(const Mat& emb);

// Elementwise |a - b|. Throws DimMismatch.
VecD pair_diff(const VecD& speech_avg, const VecD& singing_avg);

// Dimension selection rule: keep dimensions whose median absolute
// speech/singing difference has z-score >= threshold. The z-score population
// is the full dimension set, standard deviation divides by D. Even pair
// counts take the median as the mean of the two central order statistics.
// Throws ZeroVariance when all per-dimension medians are equal.
SelectionReport select_dims(const std::vector<PairDiff>& diffs, double z_threshold = 1.0);

// Column-gather of the retained dimensions, in mask order.
Mat apply_mask(const Mat& emb, const SelectionMask& mask);

// Manifest-driven wrapper over the three steps above.
SelectionReport select_from_manifest(const Manifest& manifest, double z_threshold = 1.0);

// TSV columns: dim, median, zscore, selected.
void write_report_tsv(const std::filesystem::path& path, const SelectionReport& report);

}  // namespace svs

#endif  // SVS_DIM_SELECT_HPP

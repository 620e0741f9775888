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

#include "svs/dim_select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "svs/error.hpp"

namespace svs {

VecD time_average(const Mat& emb) {
  if (emb.rows() < 1) fail(Err::EmptySequence, "time_average needs at least one frame");
  const Eigen::Index frames = emb.rows(), dims = emb.cols();
  VecD out = VecD::Zero(dims);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index d = 0; d < dims; ++d) out(d) += emb(t, d);
  return out / static_cast<double>(frames);
}

VecD pair_diff(const VecD& speech_avg, const VecD& singing_avg) {
  if (speech_avg.size() != singing_avg.size())
    fail(Err::DimMismatch, "pair_diff dims " + std::to_string(speech_avg.size()) + " vs " +
                               std::to_string(singing_avg.size()));
  return (speech_avg - singing_avg).cwiseAbs();
}

SelectionReport select_dims(const std::vector<PairDiff>& diffs, double z_threshold) {
  if (diffs.empty()) fail(Err::EmptySequence, "select_dims needs at least one pair");
  const Eigen::Index dims = diffs.front().diff.size();
  for (const auto& p : diffs)
    if (p.diff.size() != dims)
      fail(Err::DimMismatch, "pair " + p.speaker_id + " has " + std::to_string(p.diff.size()) +
                                 " dims, expected " + std::to_string(dims));

  SelectionReport rep;
  rep.medians.resize(dims);
  std::vector<double> col(diffs.size());
  for (Eigen::Index d = 0; d < dims; ++d) {
    for (size_t p = 0; p < diffs.size(); ++p) col[p] = diffs[p].diff(d);
    std::sort(col.begin(), col.end());
    const size_t n = col.size();
    rep.medians(d) = (n % 2 == 1) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }

  if (rep.medians.maxCoeff() == rep.medians.minCoeff())
    fail(Err::ZeroVariance, "all per-dimension medians are equal; z-score undefined");

  const double mean = rep.medians.mean();
  const double var = (rep.medians.array() - mean).square().sum() / static_cast<double>(dims);
  const double sd = std::sqrt(var);
  rep.zscores = (rep.medians.array() - mean) / sd;

  rep.mask.original_dim = static_cast<uint32_t>(dims);
  for (Eigen::Index d = 0; d < dims; ++d)
    if (rep.zscores(d) >= z_threshold) rep.mask.indices.push_back(static_cast<uint32_t>(d));
  rep.reduction_ratio =
      1.0 - static_cast<double>(rep.mask.indices.size()) / static_cast<double>(dims);
  return rep;
}

Mat apply_mask(const Mat& emb, const SelectionMask& mask) {
  mask.validate();
  for (uint32_t idx : mask.indices)
    if (idx >= static_cast<uint32_t>(emb.cols()))
      fail(Err::IndexOutOfRange, "mask index " + std::to_string(idx) + " out of range for " +
                                     std::to_string(emb.cols()) + "-dim embedding");
  Mat out(emb.rows(), static_cast<Eigen::Index>(mask.indices.size()));
  for (size_t j = 0; j < mask.indices.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = emb.col(mask.indices[j]);
  return out;
}

SelectionReport select_from_manifest(const Manifest& manifest, double z_threshold) {
  if (manifest.pairs.empty())
    fail(Err::ManifestError, "manifest has no parallel speech/singing pairs");
  validate_pairs(manifest);
  std::vector<PairDiff> diffs;
  diffs.reserve(manifest.pairs.size());
  for (const auto& p : manifest.pairs) {
    const Mat speech = read_matrix(manifest.resolve(p.speech_path));
    const Mat singing = read_matrix(manifest.resolve(p.singing_path));
    diffs.push_back({p.speaker_id, pair_diff(time_average(speech), time_average(singing))});
  }
  return select_dims(diffs, z_threshold);
}

void write_report_tsv(const std::filesystem::path& path, const SelectionReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path.string() + " for writing");
  out << "dim\tmedian\tzscore\tselected\n";
  size_t next = 0;
  char buf[64];
  for (Eigen::Index d = 0; d < report.medians.size(); ++d) {
    const bool selected =
        next < report.mask.indices.size() && report.mask.indices[next] == static_cast<uint32_t>(d);
    if (selected) ++next;
    std::snprintf(buf, sizeof(buf), "%.9g\t%.9g", report.medians(d), report.zscores(d));
    out << d << '\t' << buf << '\t' << (selected ? 1 : 0) << '\n';
  }
  if (!out) fail(Err::IoFailure, "write failed on " + path.string());
}

}  // namespace svs

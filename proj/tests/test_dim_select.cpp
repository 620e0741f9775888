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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "svs/dim_select.hpp"
#include "svs/error.hpp"
#include "test_util.hpp"

using namespace svs;
using test::TempDir;

namespace {

PairDiff make_diff(std::string id, std::initializer_list<double> vals) {
  PairDiff p;
  p.speaker_id = std::move(id);
  p.diff.resize(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double v : vals) p.diff(i++) = v;
  return p;
}

}  // namespace

TEST_CASE("time_average means each dimension over frames") {
  Mat emb(2, 3);
  emb << 1, 2, 3, 3, 6, 9;
  VecD avg = time_average(emb);
  CHECK(avg(0) == doctest::Approx(2.0));
  CHECK(avg(1) == doctest::Approx(4.0));
  CHECK(avg(2) == doctest::Approx(6.0));

  CHECK_THROWS_AS(time_average(Mat(0, 3)), Error);
}

TEST_CASE("pair_diff is the elementwise absolute difference") {
  VecD a(3), b(3);
  a << 1.0, -2.0, 0.5;
  b << 0.5, 2.0, 0.5;
  VecD d = pair_diff(a, b);
  CHECK(d(0) == doctest::Approx(0.5));
  CHECK(d(1) == doctest::Approx(4.0));
  CHECK(d(2) == doctest::Approx(0.0));

  VecD c(2);
  CHECK_THROWS_AS(pair_diff(a, c), Error);
}

TEST_CASE("select_dims matches the hand-computed three-dimension oracle") {
  // Single pair, medians are the raw diffs: [0.1, 0.5, 0.9].
  // mean 0.5, population std sqrt(((-0.4)^2 + 0 + 0.4^2)/3) = sqrt(0.32/3).
  auto rep = select_dims({make_diff("a", {0.1, 0.5, 0.9})});
  const double sd = std::sqrt(0.32 / 3.0);
  CHECK(rep.zscores(0) == doctest::Approx(-0.4 / sd).epsilon(1e-12));
  CHECK(rep.zscores(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.zscores(2) == doctest::Approx(0.4 / sd).epsilon(1e-12));
  REQUIRE(rep.mask.indices.size() == 1);
  CHECK(rep.mask.indices[0] == 2);
  CHECK(rep.mask.original_dim == 3);
  CHECK(rep.reduction_ratio == doctest::Approx(1.0 - 1.0 / 3.0));
}

TEST_CASE("even pair count takes the mean of the central order statistics") {
  auto rep = select_dims({make_diff("a", {0.2, 1.0}), make_diff("b", {0.4, 3.0})});
  CHECK(rep.medians(0) == doctest::Approx(0.3));
  CHECK(rep.medians(1) == doctest::Approx(2.0));
}

TEST_CASE("median is insensitive to a single outlier pair") {
  auto base = select_dims(
      {make_diff("a", {0.1, 0.5}), make_diff("b", {0.12, 0.52}), make_diff("c", {0.11, 0.51})});
  auto spiked = select_dims(
      {make_diff("a", {0.1, 0.5}), make_diff("b", {0.12, 0.52}), make_diff("c", {900.0, 0.51})});
  CHECK(spiked.medians(0) == doctest::Approx(0.12));
  CHECK(spiked.medians(1) == base.medians(1));
}

TEST_CASE("identical medians raise the zero-variance check") {
  try {
    select_dims({make_diff("a", {0.5, 0.5, 0.5})});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ZeroVariance);
    CHECK(exit_class(e.code()) == 2);
  }
}

TEST_CASE("scaling every diff by a power of two leaves z-scores exactly unchanged") {
  auto a = make_diff("a", {0.1, 0.7, 0.3, 0.9});
  auto b = a;
  b.diff *= 2.0;
  auto rep_a = select_dims({a});
  auto rep_b = select_dims({b});
  for (int d = 0; d < 4; ++d) CHECK(rep_a.zscores(d) == rep_b.zscores(d));
  CHECK(rep_a.mask.indices == rep_b.mask.indices);
}

TEST_CASE("permuting dimensions permutes the mask") {
  auto rep = select_dims({make_diff("a", {0.1, 0.9, 0.5, 0.85})});
  auto perm = select_dims({make_diff("a", {0.85, 0.5, 0.9, 0.1})});
  // Selection content is the same set of values, indices map through reversal.
  std::vector<uint32_t> mapped;
  for (uint32_t idx : rep.mask.indices) mapped.push_back(3 - idx);
  std::sort(mapped.begin(), mapped.end());
  CHECK(mapped == perm.mask.indices);
  CHECK(rep.reduction_ratio == perm.reduction_ratio);
}

TEST_CASE("768 dimensions with 93 salient ones reduce by about 88 percent") {
  PairDiff p;
  p.speaker_id = "s";
  p.diff = VecD::Zero(768);
  for (int d = 0; d < 93; ++d) p.diff(d * 8) = 1.0;
  auto rep = select_dims({p});
  CHECK(rep.mask.indices.size() == 93);
  CHECK(rep.reduction_ratio >= 0.87);
  CHECK(rep.reduction_ratio <= 0.89);
}

TEST_CASE("higher threshold selects fewer dimensions") {
  auto diffs = std::vector<PairDiff>{make_diff("a", {0.0, 0.2, 0.5, 0.8, 1.0, 2.0})};
  auto loose = select_dims(diffs, 0.5);
  auto strict = select_dims(diffs, 2.0);
  CHECK(strict.mask.indices.size() < loose.mask.indices.size());
}

TEST_CASE("apply_mask gathers columns in mask order") {
  Mat emb(2, 4);
  emb << 0, 1, 2, 3, 10, 11, 12, 13;
  SelectionMask mask{4, {1, 3}};
  Mat out = apply_mask(emb, mask);
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == 2);
  CHECK(out(0, 0) == 1);
  CHECK(out(0, 1) == 3);
  CHECK(out(1, 1) == 13);

  SelectionMask wide{9, {8}};
  CHECK_THROWS_AS(apply_mask(emb, wide), Error);
}

TEST_CASE("manifest-driven selection works end to end") {
  TempDir dir;
  // Two speakers; dimension 1 of 3 carries the singing/speech difference.
  auto put_pair = [&](const std::string& spk, float delta) {
    Mat speech = Mat::Zero(4, 3);
    Mat singing = Mat::Zero(6, 3);
    singing.col(1).setConstant(delta);
    singing(0, 0) = 0.01f * delta;
    write_tensor(dir / (spk + "_sp.kse"), speech);
    write_tensor(dir / (spk + "_si.kse"), singing);
  };
  put_pair("a", 1.0f);
  put_pair("b", 1.2f);
  test::write_text(dir / "pairs.tsv",
                   "pair\ta\ta_sp.kse\ta_si.kse\n"
                   "pair\tb\tb_sp.kse\tb_si.kse\n");
  Manifest m = read_manifest(dir / "pairs.tsv");
  auto rep = select_from_manifest(m);
  REQUIRE(rep.mask.indices.size() == 1);
  CHECK(rep.mask.indices[0] == 1);

  test::write_text(dir / "none.tsv", "# no pairs\n");
  CHECK_THROWS_AS(select_from_manifest(read_manifest(dir / "none.tsv")), Error);
}

TEST_CASE("report TSV has a header and one row per dimension") {
  TempDir dir;
  auto rep = select_dims({make_diff("a", {0.1, 0.5, 0.9})});
  write_report_tsv(dir / "report.tsv", rep);
  std::string text = test::read_bytes(dir / "report.tsv");
  CHECK(text.rfind("dim\tmedian\tzscore\tselected\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find("\t1\n") != std::string::npos);   // dim 2 selected
  CHECK(text.find("2\t0.9") != std::string::npos);  // its median
}

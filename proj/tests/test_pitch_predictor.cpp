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

#include "svs/error.hpp"
#include "svs/nn/pitch_predictor.hpp"
#include "test_util.hpp"

using namespace svs;
using namespace svs::nn;

TEST_CASE("predictor keeps the frame count and exposes its representation") {
  ParamStore ps(31);
  PitchPredictor pp(ps, "pp");
  for (int frames : {1, 15, 64, 257}) {
    Tape t;
    PitchPrediction out = pp.predict(t, t.leaf(test::random_mat(frames, 80, 60)));
    CHECK(out.f0->value.rows() == frames);
    CHECK(out.f0->value.cols() == 1);
    CHECK(out.repr->value.rows() == frames);
    CHECK(out.repr->value.cols() == 64);
    CHECK(out.f0->value.allFinite());
    CHECK(out.repr->value.allFinite());
  }
  Tape t;
  CHECK_THROWS_AS(pp.predict(t, t.leaf(Mat(0, 80))), Error);
}

TEST_CASE("predictor parameter count is frozen") {
  ParamStore ps(32);
  PitchPredictor pp(ps, "pp");
  // 80->64 input projection (5184) + 4 x 68288 per transformer layer
  // + 64->1 output head (65).
  CHECK(ps.count_trainable("pp") == 278401);
}

TEST_CASE("contour head is a linear readout of the representation") {
  ParamStore ps(33);
  PitchPredictor pp(ps, "pp");
  Tape t;
  PitchPrediction out = pp.predict(t, t.leaf(test::random_mat(12, 80, 61)));
  const Mat w = ps.find("pp/out.w")->value;
  const Mat b = ps.find("pp/out.b")->value;
  const Mat expect = (out.repr->value * w).rowwise() + b.row(0);
  CHECK((out.f0->value - expect).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("predictor is deterministic and input sensitive") {
  ParamStore ps(34);
  PitchPredictor pp(ps, "pp");
  const Mat mel = test::random_mat(20, 80, 62);

  auto f0_of = [&](const Mat& m) {
    Tape t;
    return Mat(pp.predict(t, t.leaf(m)).f0->value);
  };
  const Mat base = f0_of(mel);
  CHECK(base == f0_of(mel));

  Mat bumped = mel;
  bumped(3, 40) += 0.5f;
  CHECK((base - f0_of(bumped)).cwiseAbs().maxCoeff() > 1e-6f);
}

TEST_CASE("attention mixes information across frames") {
  ParamStore ps(35);
  PitchPredictor pp(ps, "pp");
  Mat mel = Mat::Zero(16, 80);
  mel.row(2) = test::random_mat(1, 80, 63);

  Tape t;
  const Mat out = pp.predict(t, t.leaf(mel)).f0->value;
  // A frame far from the disturbance still reacts: the layers are global.
  Mat flat = Mat::Zero(16, 80);
  Tape t2;
  const Mat ref = pp.predict(t2, t2.leaf(flat)).f0->value;
  CHECK(std::abs(out(15, 0) - ref(15, 0)) > 1e-7f);
}

TEST_CASE("gradients reach every predictor component") {
  ParamStore ps(36);
  PitchPredictor pp(ps, "pp");
  Tape t;
  PitchPrediction out = pp.predict(t, t.leaf(test::random_mat(10, 80, 64)));
  t.backward(mean_all(t, out.f0));
  for (const char* name :
       {"pp/in.w", "pp/layer1/ff1_a.w", "pp/layer1/q.w", "pp/layer1/w_r", "pp/layer1/u_bias",
        "pp/layer1/v_bias", "pp/layer1/dw.w", "pp/layer1/pw2.w", "pp/layer4/ff2_b.w",
        "pp/layer4/out_ln.g", "pp/out.w"}) {
    Param* p = ps.find(name);
    REQUIRE_MESSAGE(p != nullptr, name);
    const Mat* g = t.grad(p);
    REQUIRE_MESSAGE(g != nullptr, "no gradient: " << name);
    CHECK_MESSAGE(g->cwiseAbs().maxCoeff() > 0.0f, "zero gradient: " << name);
  }
}

TEST_CASE("two predictors with one seed agree exactly") {
  const Mat mel = test::random_mat(9, 80, 65);
  auto run = [&] {
    ParamStore ps(5);
    PitchPredictor pp(ps, "pp");
    Tape t;
    return Mat(pp.predict(t, t.leaf(mel)).repr->value);
  };
  CHECK(run() == run());
}

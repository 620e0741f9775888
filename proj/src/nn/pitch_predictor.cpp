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

#include "svs/nn/pitch_predictor.hpp"

#include <cmath>

#include "svs/error.hpp"

namespace svs::nn {

namespace {

constexpr int kHeadDim = PitchPredictor::kDim / PitchPredictor::kHeads;

// Sinusoid table over relative distances +(T-1) .. -(T-1), one row each.
Mat rel_table(int T, int dim) {
  Mat R(2 * T - 1, dim);
  for (int i = 0; i < 2 * T - 1; ++i) {
    const double dist = static_cast<double>(T - 1 - i);
    for (int k = 0; k < dim / 2; ++k) {
      const double angle = dist * std::pow(10000.0, -2.0 * k / dim);
      R(i, 2 * k) = static_cast<float>(std::sin(angle));
      R(i, 2 * k + 1) = static_cast<float>(std::cos(angle));
    }
  }
  return R;
}

}  // namespace

PitchPredictor::Layer::Layer(ParamStore& ps, const std::string& name)
    : ff1_ln(ps, name + "/ff1_ln", kDim),
      ff1_a(ps, name + "/ff1_a", kDim, kFf),
      ff1_b(ps, name + "/ff1_b", kFf, kDim),
      attn_ln(ps, name + "/attn_ln", kDim),
      q(ps, name + "/q", kDim, kDim),
      k(ps, name + "/k", kDim, kDim),
      v(ps, name + "/v", kDim, kDim),
      o(ps, name + "/o", kDim, kDim),
      w_r(ps.create(name + "/w_r", xavier_init(kDim, kDim, ps.seed(), name + "/w_r"))),
      u_bias(ps.create(name + "/u_bias", Mat::Zero(1, kDim))),
      v_bias(ps.create(name + "/v_bias", Mat::Zero(1, kDim))),
      conv_ln(ps, name + "/conv_ln", kDim),
      pw1(ps, name + "/pw1", kDim, 2 * kDim, 1, PadMode::kZero),
      dw(ps, name + "/dw", kDim, kKernel),
      mid_ln(ps, name + "/mid_ln", kDim),
      pw2(ps, name + "/pw2", kDim, kDim, 1, PadMode::kZero),
      ff2_ln(ps, name + "/ff2_ln", kDim),
      ff2_a(ps, name + "/ff2_a", kDim, kFf),
      ff2_b(ps, name + "/ff2_b", kFf, kDim),
      out_ln(ps, name + "/out_ln", kDim) {}

PitchPredictor::PitchPredictor(ParamStore& ps, const std::string& name, int mel_bins)
    : name_(name), in_(ps, name + "/in", mel_bins, kDim), out_(ps, name + "/out", kDim, 1) {
  layers_.reserve(kLayers);
  for (int i = 0; i < kLayers; ++i)
    layers_.emplace_back(ps, name + "/layer" + std::to_string(i + 1));
}

Node* PitchPredictor::attention(Tape& t, const Layer& l, Node* x) const {
  const int T = static_cast<int>(x->value.rows());
  Node* y = l.attn_ln(t, x);
  Node* qn = l.q(t, y);
  Node* kn = l.k(t, y);
  Node* vn = l.v(t, y);
  Node* rn = matmul(t, t.leaf(rel_table(T, kDim)), t.param(l.w_r));
  const double s = 1.0 / std::sqrt(static_cast<double>(kHeadDim));

  Node* heads = nullptr;
  for (int h = 0; h < kHeads; ++h) {
    const int c0 = h * kHeadDim;
    Node* qh = slice_cols(t, qn, c0, kHeadDim);
    Node* kh = slice_cols(t, kn, c0, kHeadDim);
    Node* vh = slice_cols(t, vn, c0, kHeadDim);
    Node* rh = slice_cols(t, rn, c0, kHeadDim);
    Node* uh = slice_cols(t, t.param(l.u_bias), c0, kHeadDim);
    Node* vb = slice_cols(t, t.param(l.v_bias), c0, kHeadDim);
    Node* ac = matmul_nt(t, add_rowvec(t, qh, uh), kh);
    Node* bd = rel_shift(t, matmul_nt(t, add_rowvec(t, qh, vb), rh));
    Node* attn = softmax_rows(t, scale(t, add(t, ac, bd), s));
    Node* ctx = matmul(t, attn, vh);
    heads = heads == nullptr ? ctx : concat_cols(t, heads, ctx);
  }
  return l.o(t, heads);
}

Node* PitchPredictor::conv_module(Tape& t, const Layer& l, Node* x) const {
  Node* y = glu_cols(t, l.pw1(t, l.conv_ln(t, x)));
  y = swish(t, l.mid_ln(t, l.dw(t, y)));
  return l.pw2(t, y);
}

PitchPrediction PitchPredictor::predict(Tape& t, Node* mel) const {
  if (mel->value.rows() < 1) fail(Err::ShapeError, "pitch predictor: empty mel");
  Node* x = in_(t, mel);
  for (const Layer& l : layers_) {
    auto ff = [&](const LayerNorm& ln, const Linear& a, const Linear& b, Node* in) {
      return b(t, swish(t, a(t, ln(t, in))));
    };
    x = add_scaled(t, x, ff(l.ff1_ln, l.ff1_a, l.ff1_b, x), 0.5);
    x = add(t, x, attention(t, l, x));
    x = add(t, x, conv_module(t, l, x));
    x = add_scaled(t, x, ff(l.ff2_ln, l.ff2_a, l.ff2_b, x), 0.5);
    x = l.out_ln(t, x);
  }
  return {out_(t, x), x};
}

}  // namespace svs::nn

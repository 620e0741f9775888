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

#include "svs/nn/layers.hpp"

namespace svs::nn {

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out) {
  w = ps.create(name + ".w", xavier_init(in, out, ps.seed(), name + ".w"));
  b = ps.create(name + ".b", zeros_init(1, out));
}

Node* Linear::operator()(Tape& t, Node* x) const {
  return add_rowvec(t, matmul(t, x, t.param(w)), t.param(b));
}

Conv1dLayer::Conv1dLayer(ParamStore& ps, const std::string& name, int in, int out, int kernel_,
                         PadMode pad_)
    : kernel(kernel_), pad(pad_) {
  w = ps.create(name + ".w", xavier_init(kernel_ * in, out, ps.seed(), name + ".w"));
  b = ps.create(name + ".b", zeros_init(1, out));
}

Node* Conv1dLayer::operator()(Tape& t, Node* x) const {
  return conv1d(t, x, t.param(w), t.param(b), kernel, pad);
}

DepthwiseConv1dLayer::DepthwiseConv1dLayer(ParamStore& ps, const std::string& name, int channels,
                                           int kernel_)
    : kernel(kernel_) {
  w = ps.create(name + ".w", xavier_init(kernel_, channels, ps.seed(), name + ".w"));
  b = ps.create(name + ".b", zeros_init(1, channels));
}

Node* DepthwiseConv1dLayer::operator()(Tape& t, Node* x) const {
  return depthwise_conv1d(t, x, t.param(w), t.param(b), kernel);
}

TConv1dLayer::TConv1dLayer(ParamStore& ps, const std::string& name, int in, int out) {
  w = ps.create(name + ".w", xavier_init(2 * in, out, ps.seed(), name + ".w"));
  b = ps.create(name + ".b", zeros_init(1, out));
}

Node* TConv1dLayer::operator()(Tape& t, Node* x) const {
  return tconv1d_k2s2(t, x, t.param(w), t.param(b));
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, int channels) {
  gain = ps.create(name + ".g", constant_init(1, channels, 1.0f));
  bias = ps.create(name + ".b", zeros_init(1, channels));
}

Node* LayerNorm::operator()(Tape& t, Node* x) const {
  return layer_norm_rows(t, x, t.param(gain), t.param(bias));
}

InstanceNorm::InstanceNorm(ParamStore& ps, const std::string& name, int channels) {
  gain = ps.create(name + ".g", constant_init(1, channels, 1.0f));
  bias = ps.create(name + ".b", zeros_init(1, channels));
}

Node* InstanceNorm::operator()(Tape& t, Node* x) const {
  return instance_norm_cols(t, x, t.param(gain), t.param(bias));
}

Embedding::Embedding(ParamStore& ps, const std::string& name, int count, int dim) {
  table = ps.create(name + ".table", normal_init(count, dim, 0.1f, ps.seed(), name + ".table"));
}

Node* Embedding::operator()(Tape& t, const std::vector<int>& ids) const {
  return gather_rows(t, t.param(table), ids);
}

GRU::GRU(ParamStore& ps, const std::string& name, int in, int hidden_) : hidden(hidden_) {
  w_ih = ps.create(name + ".w_ih", xavier_init(in, 3 * hidden_, ps.seed(), name + ".w_ih"));
  b_ih = ps.create(name + ".b_ih", zeros_init(1, 3 * hidden_));
  w_hh = ps.create(name + ".w_hh", xavier_init(hidden_, 3 * hidden_, ps.seed(), name + ".w_hh"));
  b_hh = ps.create(name + ".b_hh", zeros_init(1, 3 * hidden_));
}

Node* GRU::operator()(Tape& t, Node* x) const {
  const int len = static_cast<int>(x->value.rows());
  const int h = hidden;
  Node* x_gates = add_rowvec(t, matmul(t, x, t.param(w_ih)), t.param(b_ih));
  Node* wh = t.param(w_hh);
  Node* bh = t.param(b_hh);
  Node* state = t.leaf(Mat::Zero(1, h));
  std::vector<Node*> outputs;
  outputs.reserve(static_cast<size_t>(len));
  for (int step = 0; step < len; ++step) {
    Node* xg = slice_rows(t, x_gates, step, 1);
    Node* hg = add(t, matmul(t, state, wh), bh);
    Node* r = sigmoid(t, add(t, slice_cols(t, xg, 0, h), slice_cols(t, hg, 0, h)));
    Node* z = sigmoid(t, add(t, slice_cols(t, xg, h, h), slice_cols(t, hg, h, h)));
    Node* n = tanh_op(t, add(t, slice_cols(t, xg, 2 * h, h), mul(t, r, slice_cols(t, hg, 2 * h, h))));
    // h' = n + z * (h - n)
    state = add(t, n, mul(t, z, sub(t, state, n)));
    outputs.push_back(state);
  }
  return stack_rows(t, outputs);
}

BiGRU::BiGRU(ParamStore& ps, const std::string& name, int in, int hidden)
    : fwd(ps, name + ".fwd", in, hidden), bwd(ps, name + ".bwd", in, hidden) {}

Node* BiGRU::operator()(Tape& t, Node* x) const {
  Node* f = fwd(t, x);
  Node* b = reverse_rows(t, bwd(t, reverse_rows(t, x)));
  return concat_cols(t, f, b);
}

ConvBlock::ConvBlock(ParamStore& ps, const std::string& name, int in, int out, int kernel,
                     bool final_act_, PadMode pad)
    : conv_a(ps, name + ".a", in, out, kernel, pad),
      conv_b(ps, name + ".b", out, out, 1, pad),
      final_act(final_act_) {
  if (in != out) {
    shortcut = Conv1dLayer(ps, name + ".skip", in, out, 1, pad);
    has_shortcut = true;
  }
}

Node* ConvBlock::operator()(Tape& t, Node* x) const {
  Node* y = conv_b(t, mish(t, conv_a(t, x)));
  Node* res = has_shortcut ? shortcut(t, x) : x;
  Node* out = add(t, y, res);
  return final_act ? mish(t, out) : out;
}

}  // namespace svs::nn

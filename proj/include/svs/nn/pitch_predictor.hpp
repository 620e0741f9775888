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

#pragma once

#include <string>
#include <vector>

#include "svs/nn/layers.hpp"
#include "svs/nn/ops.hpp"

namespace svs::nn {

struct PitchPrediction {
  Node* f0;    // M x 1, normalized pitch units
  Node* repr;  // M x 64, the intermediate representation fed to the
               // representation-matching loss
};

// Four convolution-augmented transformer layers over a 64-dim projection of
// the mel input: macaron feedforwards (half-step), multi-head self-attention
// with relative-position scores, and a depthwise convolution module.
class PitchPredictor {
 public:
  static constexpr int kDim = 64;
  static constexpr int kFf = 128;
  static constexpr int kHeads = 8;
  static constexpr int kKernel = 15;
  static constexpr int kLayers = 4;

  PitchPredictor(ParamStore& ps, const std::string& name, int mel_bins = 80);

  PitchPrediction predict(Tape& t, Node* mel) const;

 private:
  struct Layer {
    LayerNorm ff1_ln;
    Linear ff1_a, ff1_b;
    LayerNorm attn_ln;
    Linear q, k, v, o;
    Param* w_r;     // position-score projection, no bias
    Param* u_bias;  // content-side per-head bias, 1 x kDim
    Param* v_bias;  // position-side per-head bias, 1 x kDim
    LayerNorm conv_ln;
    Conv1dLayer pw1;  // kDim -> 2*kDim, kernel 1, before the gate
    DepthwiseConv1dLayer dw;
    LayerNorm mid_ln;
    Conv1dLayer pw2;  // kDim -> kDim, kernel 1
    LayerNorm ff2_ln;
    Linear ff2_a, ff2_b;
    LayerNorm out_ln;
    Layer(ParamStore& ps, const std::string& name);
  };

  Node* attention(Tape& t, const Layer& l, Node* x) const;
  Node* conv_module(Tape& t, const Layer& l, Node* x) const;

  std::string name_;
  Linear in_;
  std::vector<Layer> layers_;
  Linear out_;
};

}  // namespace svs::nn

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

#ifndef SVS_NN_LAYERS_HPP
#define SVS_NN_LAYERS_HPP

#include <string>

#include "svs/nn/ops.hpp"
#include "svs/nn/tape.hpp"

// Parameterized layers: thin structs that own Param handles and build the
// corresponding ops on a tape. Construction registers parameters under the
// given dotted name.
namespace svs::nn {

struct Linear {
  Param* w = nullptr;
  Param* b = nullptr;
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int in, int out);
  Node* operator()(Tape& t, Node* x) const;
};

struct Conv1dLayer {
  Param* w = nullptr;
  Param* b = nullptr;
  int kernel = 0;
  PadMode pad = PadMode::kReplicate;
  Conv1dLayer() = default;
  Conv1dLayer(ParamStore& ps, const std::string& name, int in, int out, int kernel, PadMode pad);
  Node* operator()(Tape& t, Node* x) const;
};

struct DepthwiseConv1dLayer {
  Param* w = nullptr;
  Param* b = nullptr;
  int kernel = 0;
  DepthwiseConv1dLayer() = default;
  DepthwiseConv1dLayer(ParamStore& ps, const std::string& name, int channels, int kernel);
  Node* operator()(Tape& t, Node* x) const;
};

struct TConv1dLayer {
  Param* w = nullptr;
  Param* b = nullptr;
  TConv1dLayer() = default;
  TConv1dLayer(ParamStore& ps, const std::string& name, int in, int out);
  Node* operator()(Tape& t, Node* x) const;
};

struct LayerNorm {
  Param* gain = nullptr;
  Param* bias = nullptr;
  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, int channels);
  Node* operator()(Tape& t, Node* x) const;
};

struct InstanceNorm {
  Param* gain = nullptr;
  Param* bias = nullptr;
  InstanceNorm() = default;
  InstanceNorm(ParamStore& ps, const std::string& name, int channels);
  Node* operator()(Tape& t, Node* x) const;
};

struct Embedding {
  Param* table = nullptr;
  Embedding() = default;
  Embedding(ParamStore& ps, const std::string& name, int count, int dim);
  Node* operator()(Tape& t, const std::vector<int>& ids) const;
};

// Gated recurrent unit, scanning rows forward. Gate layout r|z|n.
struct GRU {
  Param* w_ih = nullptr;
  Param* b_ih = nullptr;
  Param* w_hh = nullptr;
  Param* b_hh = nullptr;
  int hidden = 0;
  GRU() = default;
  GRU(ParamStore& ps, const std::string& name, int in, int hidden);
  Node* operator()(Tape& t, Node* x) const;  // T x in -> T x hidden
};

// Forward and backward scans concatenated: T x in -> T x (2 * hidden).
struct BiGRU {
  GRU fwd, bwd;
  BiGRU() = default;
  BiGRU(ParamStore& ps, const std::string& name, int in, int hidden);
  Node* operator()(Tape& t, Node* x) const;
};

// conv(kernel) -> Mish -> conv(1), residual add. Blocks that change width
// project the shortcut with a 1x1 conv. `final_act` appends a Mish after the
// residual join.
struct ConvBlock {
  Conv1dLayer conv_a, conv_b;
  Conv1dLayer shortcut;
  bool has_shortcut = false;
  bool final_act = false;
  ConvBlock() = default;
  ConvBlock(ParamStore& ps, const std::string& name, int in, int out, int kernel, bool final_act,
            PadMode pad = PadMode::kReplicate);
  Node* operator()(Tape& t, Node* x) const;
};

}  // namespace svs::nn

#endif  // SVS_NN_LAYERS_HPP

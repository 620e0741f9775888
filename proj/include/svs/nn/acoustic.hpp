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

// Non-attentive text-to-mel generator. Alignment comes only from
// nearest-neighbour length expansion; there is no attention anywhere.
struct AcousticConfig {
  int vocab = 0;          // symbol inventory size; must be set
  int enc_dim = 128;      // E, even
  int speaker_dim = 32;   // S
  int global_dim = 16;    // G
  int consumer_dim = 64;  // C, width of conditioning.local
  int dec_hidden = 128;
  int mel_bins = 80;
  // Positional information: rotary transform by default; true switches to
  // additive sinusoidal embeddings for ablation.
  bool additive_pos = false;
};

struct GeneratorOutput {
  Node* decoder;  // M x mel_bins
  Node* postnet;  // M x mel_bins, decoder + residual refinement
  Node* encoded;  // T x E encoder outputs, exposed for the dependence penalty
};

class Acoustic {
 public:
  Acoustic(ParamStore& ps, const std::string& name, const AcousticConfig& cfg);

  // Per-symbol contextual embeddings, length preserving: T ids -> T x E.
  Node* encode(Tape& t, const std::vector<int>& ids) const;

  // Rotary or additive positional transform per config.
  Node* pos_apply(Tape& t, Node* x) const;

  // Full pass: encode, concat speaker + global embedding per frame, position,
  // expand to mel_len, fuse local conditioning, decode, refine.
  // cond_local may be null (ablation): the fusion step is skipped.
  GeneratorOutput generate(Tape& t, const std::vector<int>& ids, Node* cond_local,
                           Node* global_emb, Node* spk, int mel_len) const;

  const AcousticConfig& config() const { return cfg_; }

 private:
  AcousticConfig cfg_;
  Embedding emb_;
  std::vector<ConvBlock> enc_blocks_;  // 3 blocks, kernel 5
  BiGRU enc_rnn_;
  Linear adapter_;  // C -> E + S + G, merges positioned local conditioning
  std::vector<ConvBlock> dec_blocks_;  // 2 blocks, kernel 5
  GRU dec_rnn_;
  Linear dec_out_;
  std::vector<Conv1dLayer> postnet_;  // 5 convs kernel 5, tanh between
};

}  // namespace svs::nn

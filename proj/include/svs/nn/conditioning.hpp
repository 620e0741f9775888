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
#include "svs/pitch_objective.hpp"

namespace svs::nn {

// Maps reduced self-supervised embeddings to per-frame local conditioning and
// a time-averaged global embedding, with speaker-dependent output scaling.
struct ConsumerConfig {
  int in_dim = 0;        // reduced embedding width R; must be set
  int channels = 64;     // local conditioning width C
  int global_dim = 16;   // global embedding width G
  int speaker_dim = 32;  // speaker embedding width S
};

struct ConsumerOut {
  Node* local;       // mel_len x C
  Node* global_emb;  // 1 x G
};

class Consumer {
 public:
  Consumer(ParamStore& ps, const std::string& name, const ConsumerConfig& cfg);

  // R -> 8 projection, per-channel instance norm over time, Mish, then
  // linear interpolation of the time axis to mel_len.
  Node* project_reduce(Tape& t, Node* emb, int mel_len) const;

  // Test probe: the projection right after instance normalization, before the
  // activation, at native length.
  Node* project_norm_probe(Tape& t, Node* emb) const;

  // 14 conv blocks over the projected input, conditioned on the speaker via
  // a layer-norm whose scale/bias are affine in spk (1 x S).
  ConsumerOut forward(Tape& t, Node* projected, Node* spk) const;

  ConsumerOut operator()(Tape& t, Node* emb, Node* spk, int mel_len) const;

  const ConsumerConfig& config() const { return cfg_; }

 private:
  ConsumerConfig cfg_;
  Linear proj_;
  InstanceNorm norm_;
  std::vector<ConvBlock> blocks_;
  Linear cln_scale_;  // S -> C; effective scale = 1 + cln_scale_(spk)
  Linear cln_bias_;   // S -> C
  Conv1dLayer bottleneck_;  // C -> G, kernel 1
};

// Squared maximum mean discrepancy between two equal-size samples, biased
// V-statistic with an RBF kernel. Bandwidth: median pairwise distance of the
// joint sample (treated as a constant in the gradient).
double mmd_loss(const MatD& x, const MatD& y);
// d mmd_loss / d x, with y and the bandwidth held fixed.
MatD mmd_loss_grad(const MatD& x, const MatD& y);

// Fixed-bandwidth core, exposed so gradients can be checked with h frozen.
double median_bandwidth(const MatD& x, const MatD& y);
double mmd_loss_h(const MatD& x, const MatD& y, double h);
MatD mmd_loss_grad_h(const MatD& x, const MatD& y, double h);

// Mean squared Pearson correlation over all (column of g, column of e) pairs.
// A zero-variance column contributes 0 to every pair involving it.
double mi_loss(const MatD& g, const MatD& e);
// d mi_loss / d g, with e held fixed.
MatD mi_loss_grad(const MatD& g, const MatD& e);

// Tape bridges. The second argument is a constant sample (no gradient).
Node* mmd_op(Tape& t, Node* x, const MatD& prior);
Node* mi_op(Tape& t, Node* g, const MatD& enc);

// B x G standard-normal prior draw for the MMD term.
MatD sample_prior(int rows, int cols, std::mt19937_64& rng);

}  // namespace svs::nn

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

#include <random>
#include <string>
#include <vector>

#include "svs/nn/layers.hpp"
#include "svs/nn/ops.hpp"

namespace svs::nn {

// U-shaped mel discriminator over fixed-length slices. Every weight is
// spectrally normalized (1-step power iteration per forward, persistent
// direction buffers). The score comes from the deepest encoder features; the
// decoder path reconstructs the input slice.
struct DiscConfig {
  int mel_bins = 80;
  int slice_len = 64;  // frames per slice; divisible by 16
  double dropout_p = 0.2;
  double p_raf = 0.1;  // probability of labeling a real sample as fake
  int diffusion_steps = 20;
  double beta_min = 1e-4;
  double beta_max = 0.2;
};

struct AugmentOptions {
  bool spec_masks = true;
  int forced_t = -1;  // >= 0 pins the diffusion step; 0 means no noise
};

struct DiscForward {
  Node* score;  // scalar
  Node* recon;  // slice_len x mel_bins
};

class Discriminator {
 public:
  Discriminator(ParamStore& ps, const std::string& name, const DiscConfig& cfg);

  // Cumulative signal coefficient of the forward noising schedule; 1 at t=0.
  double alpha_bar(int t) const;

  // SpecAugment masking plus one diffusion step. Identity (the same node)
  // when masks are disabled and the step is forced to 0.
  Node* augment(Tape& t, Node* x, std::mt19937_64* rng,
                const AugmentOptions& opt = {}) const;

  DiscForward forward(Tape& t, Node* slice, bool train, std::mt19937_64* rng) const;

  // Hinge objective over augmented real and fake slices, plus L1+L2
  // reconstruction of each augmented real toward its clean version. Real
  // samples are labeled fake with probability p_raf.
  Node* d_objective(Tape& t, const std::vector<Mat>& real_clean,
                    const std::vector<Mat>& fake, std::mt19937_64* rng) const;

  // Generator-side adversarial term: -mean(score(augment(fake))).
  Node* g_adversarial(Tape& t, const std::vector<Node*>& fake, std::mt19937_64* rng) const;

  const DiscConfig& config() const { return cfg_; }

  static int slice_offset(int frames, int slice_len, std::mt19937_64& rng);
  // Extracts a slice_len excerpt at a uniform offset; shorter inputs tile.
  static Mat slice_of(const Mat& mel, int slice_len, std::mt19937_64& rng);

 private:
  struct SnConv {
    Param* w;  // (kernel*cin) x cout, semi-orthogonal at init
    Param* u;  // persistent power-iteration buffers
    Param* v;
    Param* b;
    int kernel;
    PadMode pad;
    SnConv(ParamStore& ps, const std::string& name, int in, int out, int kernel, PadMode pad);
    Node* operator()(Tape& t, Node* x) const;
  };
  struct SnTConv {
    Param* w;  // (2*cin) x cout
    Param* u;
    Param* v;
    Param* b;
    SnTConv(ParamStore& ps, const std::string& name, int in, int out);
    Node* operator()(Tape& t, Node* x) const;
  };
  struct Down {
    SnConv a, b;
    Down(ParamStore& ps, const std::string& name, int in, int out);
  };
  struct Up {
    SnTConv t;
    SnConv a, b;
    Up(ParamStore& ps, const std::string& name, int in, int skip, int out);
  };

  Node* recon_term(Tape& t, Node* recon, const Mat& clean) const;

  DiscConfig cfg_;
  SnConv in_conv_;
  std::vector<Down> down_;
  std::vector<Up> up_;
  SnConv out_conv_;
};

}  // namespace svs::nn

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

#include "svs/nn/discriminator.hpp"

#include <cmath>

#include "svs/error.hpp"

namespace svs::nn {

Discriminator::SnConv::SnConv(ParamStore& ps, const std::string& name, int in, int out,
                              int kernel, PadMode pad)
    : w(ps.create(name + "/w", semi_orthogonal_init(kernel * in, out, ps.seed(), name + "/w"))),
      u(ps.create(name + "/u", normal_init(1, kernel * in, 1.0f, ps.seed(), name + "/u"),
                  false)),
      v(ps.create(name + "/v", normal_init(1, out, 1.0f, ps.seed(), name + "/v"), false)),
      b(ps.create(name + "/b", Mat::Zero(1, out))),
      kernel(kernel),
      pad(pad) {}

Node* Discriminator::SnConv::operator()(Tape& t, Node* x) const {
  return conv1d(t, x, spectral_norm(t, t.param(w), u, v), t.param(b), kernel, pad);
}

Discriminator::SnTConv::SnTConv(ParamStore& ps, const std::string& name, int in, int out)
    : w(ps.create(name + "/w", semi_orthogonal_init(2 * in, out, ps.seed(), name + "/w"))),
      u(ps.create(name + "/u", normal_init(1, 2 * in, 1.0f, ps.seed(), name + "/u"), false)),
      v(ps.create(name + "/v", normal_init(1, out, 1.0f, ps.seed(), name + "/v"), false)),
      b(ps.create(name + "/b", Mat::Zero(1, out))) {}

Node* Discriminator::SnTConv::operator()(Tape& t, Node* x) const {
  return tconv1d_k2s2(t, x, spectral_norm(t, t.param(w), u, v), t.param(b));
}

Discriminator::Down::Down(ParamStore& ps, const std::string& name, int in, int out)
    : a(ps, name + "/a", in, out, 3, PadMode::kZero),
      b(ps, name + "/b", out, out, 3, PadMode::kZero) {}

Discriminator::Up::Up(ParamStore& ps, const std::string& name, int in, int skip, int out)
    : t(ps, name + "/t", in, in),
      a(ps, name + "/a", in + skip, out, 3, PadMode::kZero),
      b(ps, name + "/b", out, out, 3, PadMode::kZero) {}

Discriminator::Discriminator(ParamStore& ps, const std::string& name, const DiscConfig& cfg)
    : cfg_(cfg), in_conv_(ps, name + "/in", cfg.mel_bins, 64, 3, PadMode::kZero),
      out_conv_(ps, name + "/out", 64, cfg.mel_bins, 3, PadMode::kZero) {
  if (cfg.slice_len < 16 || cfg.slice_len % 16 != 0)
    fail(Err::BadSliceLength, "discriminator: slice_len must be a positive multiple of 16");
  const int ch[5] = {64, 128, 256, 512, 512};
  for (int i = 0; i < 4; ++i)
    down_.emplace_back(ps, name + "/down" + std::to_string(i + 1), ch[i], ch[i + 1]);
  // Mirror of the encoder: transposed conv keeps the deep width, the conv
  // pair absorbs the skip and steps the width down.
  for (int i = 0; i < 4; ++i) {
    const int deep = ch[4 - i];       // channels entering this stage
    const int skip = ch[4 - i];       // matching encoder block output
    const int out = ch[3 - i];        // next-shallower width
    up_.emplace_back(ps, name + "/up" + std::to_string(i + 1), deep, skip, out);
  }
}

double Discriminator::alpha_bar(int t) const {
  if (t < 0 || t > cfg_.diffusion_steps)
    fail(Err::ShapeError, "alpha_bar: step out of range");
  double ab = 1.0;
  for (int i = 1; i <= t; ++i) {
    const double beta =
        cfg_.beta_min + (cfg_.beta_max - cfg_.beta_min) *
                            (cfg_.diffusion_steps > 1
                                 ? static_cast<double>(i - 1) / (cfg_.diffusion_steps - 1)
                                 : 0.0);
    ab *= 1.0 - beta;
  }
  return ab;
}

Node* Discriminator::augment(Tape& t, Node* x, std::mt19937_64* rng,
                             const AugmentOptions& opt) const {
  const int L = static_cast<int>(x->value.rows());
  const int bins = static_cast<int>(x->value.cols());
  Node* out = x;

  if (opt.spec_masks) {
    if (rng == nullptr) fail(Err::ConfigError, "augment: masking needs an rng");
    Mat mask = Mat::Ones(L, bins);
    bool any = false;
    std::uniform_int_distribution<int> count(0, 2);
    const int nf = count(*rng);
    for (int m = 0; m < nf; ++m) {
      const int w = std::uniform_int_distribution<int>(1, std::min(8, bins))(*rng);
      const int f0 = std::uniform_int_distribution<int>(0, bins - w)(*rng);
      mask.middleCols(f0, w).setZero();
      any = true;
    }
    const int nt = count(*rng);
    for (int m = 0; m < nt; ++m) {
      const int w = std::uniform_int_distribution<int>(1, std::min(10, L))(*rng);
      const int t0 = std::uniform_int_distribution<int>(0, L - w)(*rng);
      mask.middleRows(t0, w).setZero();
      any = true;
    }
    if (any) out = mul(t, out, t.leaf(mask));
  }

  int step = opt.forced_t;
  if (step < 0) {
    if (rng == nullptr) fail(Err::ConfigError, "augment: diffusion needs an rng");
    step = std::uniform_int_distribution<int>(1, cfg_.diffusion_steps)(*rng);
  }
  if (step > 0) {
    if (rng == nullptr) fail(Err::ConfigError, "augment: diffusion needs an rng");
    const double ab = alpha_bar(step);
    Mat eps(L, bins);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < bins; ++j) eps(i, j) = dist(*rng);
    out = add(t, scale(t, out, std::sqrt(ab)),
              t.leaf(Mat(static_cast<float>(std::sqrt(1.0 - ab)) * eps)));
  }
  return out;
}

DiscForward Discriminator::forward(Tape& t, Node* slice, bool train,
                                   std::mt19937_64* rng) const {
  const int L = static_cast<int>(slice->value.rows());
  if (L < 16 || L % 16 != 0)
    fail(Err::BadSliceLength,
         "discriminator: slice length " + std::to_string(L) + " not a multiple of 16");
  if (slice->value.cols() != cfg_.mel_bins) fail(Err::ShapeError, "discriminator: mel bins");

  Node* x = gelu(t, in_conv_(t, slice));
  std::vector<Node*> skips;
  for (const Down& d : down_) {
    x = gelu(t, d.a(t, x));
    x = gelu(t, d.b(t, x));
    if (train) x = dropout(t, x, cfg_.dropout_p, rng);
    skips.push_back(x);
    x = maxpool_k2s2(t, x);
  }
  Node* score = mean_all(t, x);
  for (size_t i = 0; i < up_.size(); ++i) {
    const Up& u = up_[i];
    x = u.t(t, x);
    x = concat_cols(t, x, skips[skips.size() - 1 - i]);
    x = gelu(t, u.a(t, x));
    x = gelu(t, u.b(t, x));
  }
  return {score, out_conv_(t, x)};
}

Node* Discriminator::recon_term(Tape& t, Node* recon, const Mat& clean) const {
  return add(t, l1_to(t, recon, clean), l2_to(t, recon, clean));
}

Node* Discriminator::d_objective(Tape& t, const std::vector<Mat>& real_clean,
                                 const std::vector<Mat>& fake, std::mt19937_64* rng) const {
  if (real_clean.empty() || fake.empty()) fail(Err::EmptyBatch, "disc loss: empty batch");
  std::bernoulli_distribution raf(cfg_.p_raf);
  Node* one = t.leaf(Mat::Ones(1, 1));
  Node* hinge_real = nullptr;
  Node* recon_loss = nullptr;
  for (const Mat& clean : real_clean) {
    Node* aug = augment(t, t.leaf(clean), rng);
    DiscForward f = forward(t, aug, true, rng);
    const bool as_fake = cfg_.p_raf > 0.0 && raf(*rng);
    Node* margin = as_fake ? relu(t, add(t, one, f.score)) : relu(t, sub(t, one, f.score));
    hinge_real = hinge_real == nullptr ? margin : add(t, hinge_real, margin);
    Node* rt = recon_term(t, f.recon, clean);
    recon_loss = recon_loss == nullptr ? rt : add(t, recon_loss, rt);
  }
  Node* hinge_fake = nullptr;
  for (const Mat& fm : fake) {
    Node* aug = augment(t, t.leaf(fm), rng);
    DiscForward f = forward(t, aug, true, rng);
    Node* margin = relu(t, add(t, one, f.score));
    hinge_fake = hinge_fake == nullptr ? margin : add(t, hinge_fake, margin);
  }
  const double nr = static_cast<double>(real_clean.size());
  const double nf = static_cast<double>(fake.size());
  Node* loss = add(t, scale(t, add(t, hinge_real, recon_loss), 1.0 / nr),
                   scale(t, hinge_fake, 1.0 / nf));
  return loss;
}

Node* Discriminator::g_adversarial(Tape& t, const std::vector<Node*>& fake,
                                   std::mt19937_64* rng) const {
  if (fake.empty()) fail(Err::EmptyBatch, "adversarial term: empty batch");
  Node* acc = nullptr;
  for (Node* f : fake) {
    DiscForward fw = forward(t, augment(t, f, rng), true, rng);
    acc = acc == nullptr ? fw.score : add(t, acc, fw.score);
  }
  return scale(t, acc, -1.0 / static_cast<double>(fake.size()));
}

int Discriminator::slice_offset(int frames, int slice_len, std::mt19937_64& rng) {
  if (frames <= slice_len) return 0;
  return std::uniform_int_distribution<int>(0, frames - slice_len)(rng);
}

Mat Discriminator::slice_of(const Mat& mel, int slice_len, std::mt19937_64& rng) {
  const int frames = static_cast<int>(mel.rows());
  const int off = slice_offset(frames, slice_len, rng);
  Mat out(slice_len, mel.cols());
  for (int i = 0; i < slice_len; ++i) out.row(i) = mel.row((off + i) % frames);
  return out;
}

}  // namespace svs::nn

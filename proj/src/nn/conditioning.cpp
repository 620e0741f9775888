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

#include "svs/nn/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "svs/error.hpp"

namespace svs::nn {

namespace {
constexpr int kProjDim = 8;
}

Consumer::Consumer(ParamStore& ps, const std::string& name, const ConsumerConfig& cfg)
    : cfg_(cfg),
      proj_(ps, name + "/proj", cfg.in_dim, kProjDim),
      norm_(ps, name + "/norm", kProjDim),
      cln_scale_(ps, name + "/cln_scale", cfg.speaker_dim, cfg.channels),
      cln_bias_(ps, name + "/cln_bias", cfg.speaker_dim, cfg.channels),
      bottleneck_(ps, name + "/bottleneck", cfg.channels, cfg.global_dim, 1,
                  PadMode::kReplicate) {
  if (cfg.in_dim < 1) fail(Err::ConfigError, "consumer: in_dim must be set");
  // Blocks 1-6: kernel 3, no trailing activation. Blocks 7-14: kernel 5, Mish.
  blocks_.reserve(14);
  for (int i = 0; i < 14; ++i) {
    const int in = i == 0 ? kProjDim : cfg.channels;
    const int kernel = i < 6 ? 3 : 5;
    const bool act = i >= 6;
    blocks_.emplace_back(ps, name + "/blk" + std::to_string(i + 1), in, cfg.channels, kernel,
                         act);
  }
}

Node* Consumer::project_norm_probe(Tape& t, Node* emb) const {
  if (emb->value.cols() != cfg_.in_dim)
    fail(Err::DimMismatch, "consumer: embedding width " + std::to_string(emb->value.cols()) +
                               ", expected " + std::to_string(cfg_.in_dim));
  return instance_norm_cols(t, proj_(t, emb), t.param(norm_.gain), t.param(norm_.bias));
}

Node* Consumer::project_reduce(Tape& t, Node* emb, int mel_len) const {
  if (mel_len < 1) fail(Err::ShapeError, "consumer: mel_len must be >= 1");
  return interp_linear(t, mish(t, project_norm_probe(t, emb)), mel_len);
}

ConsumerOut Consumer::forward(Tape& t, Node* projected, Node* spk) const {
  if (projected->value.cols() != kProjDim) fail(Err::ShapeError, "consumer: projected width");
  if (spk->value.rows() != 1 || spk->value.cols() != cfg_.speaker_dim)
    fail(Err::ShapeError, "consumer: speaker embedding shape");
  Node* x = projected;
  for (const ConvBlock& blk : blocks_) x = blk(t, x);
  // Speaker-conditioned normalization: plain per-frame layer norm, then an
  // affine whose scale/bias are linear in the speaker embedding.
  Node* normed = layer_norm_rows_plain(t, x);
  Node* one = t.leaf(Mat::Ones(1, cfg_.channels));
  Node* sc = add(t, one, cln_scale_(t, spk));
  Node* local = add_rowvec(t, mul_rowvec(t, normed, sc), cln_bias_(t, spk));
  Node* global_path = bottleneck_(t, local);
  return {local, mean_rows(t, global_path)};
}

ConsumerOut Consumer::operator()(Tape& t, Node* emb, Node* spk, int mel_len) const {
  return forward(t, project_reduce(t, emb, mel_len), spk);
}

namespace {

void check_mmd_shapes(const MatD& x, const MatD& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    fail(Err::ShapeError, "mmd: sample shapes differ");
  if (x.rows() < 2) fail(Err::BatchTooSmall, "mmd: needs batch >= 2");
}

double kernel_sum(const MatD& a, const MatD& b, double h) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j)
      s += std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * h * h));
  return s;
}

}  // namespace

// Median pairwise Euclidean distance over the stacked sample; 0 distances of
// self-pairs excluded. Returns 1 when everything coincides.
double median_bandwidth(const MatD& x, const MatD& y) {
  const int bx = static_cast<int>(x.rows());
  const int n = bx + static_cast<int>(y.rows());
  std::vector<double> d;
  d.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  auto row = [&](int i) -> MatD { return i < bx ? x.row(i) : y.row(i - bx); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d.push_back((row(i) - row(j)).norm());
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const size_t m = d.size();
  const double med = m % 2 == 1 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
  return med > 1e-12 ? med : 1.0;
}

double mmd_loss_h(const MatD& x, const MatD& y, double h) {
  check_mmd_shapes(x, y);
  const double b2 = static_cast<double>(x.rows()) * static_cast<double>(x.rows());
  return (kernel_sum(x, x, h) - 2.0 * kernel_sum(x, y, h) + kernel_sum(y, y, h)) / b2;
}

double mmd_loss(const MatD& x, const MatD& y) {
  check_mmd_shapes(x, y);
  return mmd_loss_h(x, y, median_bandwidth(x, y));
}

MatD mmd_loss_grad_h(const MatD& x, const MatD& y, double h) {
  check_mmd_shapes(x, y);
  const double b2 = static_cast<double>(x.rows()) * static_cast<double>(x.rows());
  MatD g = MatD::Zero(x.rows(), x.cols());
  for (int p = 0; p < x.rows(); ++p) {
    MatD acc = MatD::Zero(1, x.cols());
    for (int j = 0; j < x.rows(); ++j) {
      const MatD diff = x.row(j) - x.row(p);
      acc += std::exp(-diff.squaredNorm() / (2.0 * h * h)) * diff;
    }
    for (int j = 0; j < y.rows(); ++j) {
      const MatD diff = y.row(j) - x.row(p);
      acc -= std::exp(-diff.squaredNorm() / (2.0 * h * h)) * diff;
    }
    g.row(p) = (2.0 / (b2 * h * h)) * acc;
  }
  return g;
}

MatD mmd_loss_grad(const MatD& x, const MatD& y) {
  check_mmd_shapes(x, y);
  return mmd_loss_grad_h(x, y, median_bandwidth(x, y));
}

namespace {

void check_mi_shapes(const MatD& g, const MatD& e) {
  if (g.rows() != e.rows()) fail(Err::ShapeError, "mi: batch sizes differ");
  if (g.rows() < 3) fail(Err::BatchTooSmall, "mi: needs batch >= 3");
}

}  // namespace

double mi_loss(const MatD& g, const MatD& e) {
  check_mi_shapes(g, e);
  const double b = static_cast<double>(g.rows());
  const MatD gc = g.rowwise() - g.colwise().mean();
  const MatD ec = e.rowwise() - e.colwise().mean();
  const MatD gs = (gc.array().square().colwise().sum() / b).sqrt();  // 1 x G
  const MatD es = (ec.array().square().colwise().sum() / b).sqrt();
  double acc = 0.0;
  for (int i = 0; i < g.cols(); ++i)
    for (int j = 0; j < e.cols(); ++j) {
      const double s = gs(0, i), u = es(0, j);
      if (s < 1e-12 || u < 1e-12) continue;  // constant column: correlation 0
      const double r = gc.col(i).dot(ec.col(j)) / (b * s * u);
      acc += r * r;
    }
  return acc / (static_cast<double>(g.cols()) * static_cast<double>(e.cols()));
}

MatD mi_loss_grad(const MatD& g, const MatD& e) {
  check_mi_shapes(g, e);
  const double b = static_cast<double>(g.rows());
  const MatD gc = g.rowwise() - g.colwise().mean();
  const MatD ec = e.rowwise() - e.colwise().mean();
  const MatD gs = (gc.array().square().colwise().sum() / b).sqrt();
  const MatD es = (ec.array().square().colwise().sum() / b).sqrt();
  const double pairs = static_cast<double>(g.cols()) * static_cast<double>(e.cols());
  MatD grad = MatD::Zero(g.rows(), g.cols());
  for (int i = 0; i < g.cols(); ++i) {
    const double s = gs(0, i);
    if (s < 1e-12) continue;
    for (int j = 0; j < e.cols(); ++j) {
      const double u = es(0, j);
      if (u < 1e-12) continue;
      const double r = gc.col(i).dot(ec.col(j)) / (b * s * u);
      // d r / d g_bi = e_hat / (B s u) - r * g_hat / (B s^2); chain with 2r.
      grad.col(i) += (2.0 * r / pairs) *
                     (ec.col(j) / (b * s * u) - (r / (b * s * s)) * gc.col(i));
    }
  }
  return grad;
}

Node* mmd_op(Tape& t, Node* x, const MatD& prior) {
  const MatD xd = x->value.cast<double>();
  const double val = mmd_loss(xd, prior);
  Node* out = t.make(constant_init(1, 1, static_cast<float>(val)), {x}, nullptr);
  out->back = [x, xd, prior, out] {
    const float up = out->grad(0, 0);
    accum(x, Mat((mmd_loss_grad(xd, prior) * static_cast<double>(up)).cast<float>()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* mi_op(Tape& t, Node* g, const MatD& enc) {
  const MatD gd = g->value.cast<double>();
  const double val = mi_loss(gd, enc);
  Node* out = t.make(constant_init(1, 1, static_cast<float>(val)), {g}, nullptr);
  out->back = [g, gd, enc, out] {
    const float up = out->grad(0, 0);
    accum(g, Mat((mi_loss_grad(gd, enc) * static_cast<double>(up)).cast<float>()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

MatD sample_prior(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  MatD out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
  return out;
}

}  // namespace svs::nn

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

#include "svs/nn/ops.hpp"

#include <cmath>
#include <numbers>

#include "svs/error.hpp"
#include "svs/pitch_objective.hpp"

namespace svs::nn {

namespace {

void want_same_shape(const Node* a, const Node* b, const char* who) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    fail(Err::ShapeError, std::string(who) + ": shape mismatch " +
                              std::to_string(a->value.rows()) + "x" +
                              std::to_string(a->value.cols()) + " vs " +
                              std::to_string(b->value.rows()) + "x" +
                              std::to_string(b->value.cols()));
}

constexpr float kNormEps = 1e-5f;

}  // namespace

Node* add(Tape& t, Node* a, Node* b) {
  want_same_shape(a, b, "add");
  Node* out = t.make(a->value + b->value, {a, b}, nullptr);
  out->back = [a, b, out] {
    accum(a, out->grad);
    accum(b, out->grad);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* sub(Tape& t, Node* a, Node* b) {
  want_same_shape(a, b, "sub");
  Node* out = t.make(a->value - b->value, {a, b}, nullptr);
  out->back = [a, b, out] {
    accum(a, out->grad);
    accum(b, Mat(-out->grad));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* mul(Tape& t, Node* a, Node* b) {
  want_same_shape(a, b, "mul");
  Node* out = t.make(Mat(a->value.cwiseProduct(b->value)), {a, b}, nullptr);
  out->back = [a, b, out] {
    accum(a, Mat(out->grad.cwiseProduct(b->value)));
    accum(b, Mat(out->grad.cwiseProduct(a->value)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* scale(Tape& t, Node* a, double s) {
  const float fs = static_cast<float>(s);
  Node* out = t.make(Mat(a->value * fs), {a}, nullptr);
  out->back = [a, out, fs] { accum(a, Mat(out->grad * fs)); };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* add_scaled(Tape& t, Node* a, Node* b, double sb) {
  want_same_shape(a, b, "add_scaled");
  const float fs = static_cast<float>(sb);
  Node* out = t.make(Mat(a->value + fs * b->value), {a, b}, nullptr);
  out->back = [a, b, out, fs] {
    accum(a, out->grad);
    accum(b, Mat(out->grad * fs));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* add_rowvec(Tape& t, Node* x, Node* r) {
  if (r->value.rows() != 1 || r->value.cols() != x->value.cols())
    fail(Err::ShapeError, "add_rowvec: broadcast vector must be 1 x cols(x)");
  Mat v = x->value;
  v.rowwise() += r->value.row(0);
  Node* out = t.make(std::move(v), {x, r}, nullptr);
  out->back = [x, r, out] {
    accum(x, out->grad);
    accum(r, Mat(out->grad.colwise().sum()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* mul_rowvec(Tape& t, Node* x, Node* r) {
  if (r->value.rows() != 1 || r->value.cols() != x->value.cols())
    fail(Err::ShapeError, "mul_rowvec: broadcast vector must be 1 x cols(x)");
  Mat v = x->value.array().rowwise() * r->value.row(0).array();
  Node* out = t.make(std::move(v), {x, r}, nullptr);
  out->back = [x, r, out] {
    accum(x, Mat(out->grad.array().rowwise() * r->value.row(0).array()));
    accum(r, Mat(out->grad.cwiseProduct(x->value).colwise().sum()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* matmul(Tape& t, Node* a, Node* b) {
  if (a->value.cols() != b->value.rows())
    fail(Err::ShapeError, "matmul: inner dims " + std::to_string(a->value.cols()) + " vs " +
                              std::to_string(b->value.rows()));
  Node* out = t.make(Mat(a->value * b->value), {a, b}, nullptr);
  out->back = [a, b, out] {
    accum(a, Mat(out->grad * b->value.transpose()));
    accum(b, Mat(a->value.transpose() * out->grad));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* matmul_nt(Tape& t, Node* a, Node* b) {
  if (a->value.cols() != b->value.cols())
    fail(Err::ShapeError, "matmul_nt: inner dims " + std::to_string(a->value.cols()) + " vs " +
                              std::to_string(b->value.cols()));
  Node* out = t.make(Mat(a->value * b->value.transpose()), {a, b}, nullptr);
  out->back = [a, b, out] {
    accum(a, Mat(out->grad * b->value));
    accum(b, Mat(out->grad.transpose() * a->value));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* slice_rows(Tape& t, Node* x, int r0, int n) {
  if (r0 < 0 || n < 0 || r0 + n > x->value.rows()) fail(Err::ShapeError, "slice_rows out of range");
  Node* out = t.make(Mat(x->value.middleRows(r0, n)), {x}, nullptr);
  out->back = [x, out, r0, n] {
    Mat g = Mat::Zero(x->value.rows(), x->value.cols());
    g.middleRows(r0, n) = out->grad;
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* slice_cols(Tape& t, Node* x, int c0, int n) {
  if (c0 < 0 || n < 0 || c0 + n > x->value.cols()) fail(Err::ShapeError, "slice_cols out of range");
  Node* out = t.make(Mat(x->value.middleCols(c0, n)), {x}, nullptr);
  out->back = [x, out, c0, n] {
    Mat g = Mat::Zero(x->value.rows(), x->value.cols());
    g.middleCols(c0, n) = out->grad;
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* concat_cols(Tape& t, Node* a, Node* b) {
  if (a->value.rows() != b->value.rows()) fail(Err::ShapeError, "concat_cols: row mismatch");
  Mat v(a->value.rows(), a->value.cols() + b->value.cols());
  v << a->value, b->value;
  Node* out = t.make(std::move(v), {a, b}, nullptr);
  const int ca = static_cast<int>(a->value.cols()), cb = static_cast<int>(b->value.cols());
  out->back = [a, b, out, ca, cb] {
    accum(a, Mat(out->grad.leftCols(ca)));
    accum(b, Mat(out->grad.rightCols(cb)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* concat_rows(Tape& t, Node* a, Node* b) {
  if (a->value.cols() != b->value.cols()) fail(Err::ShapeError, "concat_rows: col mismatch");
  Mat v(a->value.rows() + b->value.rows(), a->value.cols());
  v << a->value, b->value;
  Node* out = t.make(std::move(v), {a, b}, nullptr);
  const int ra = static_cast<int>(a->value.rows()), rb = static_cast<int>(b->value.rows());
  out->back = [a, b, out, ra, rb] {
    accum(a, Mat(out->grad.topRows(ra)));
    accum(b, Mat(out->grad.bottomRows(rb)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* stack_rows(Tape& t, std::span<Node* const> rows) {
  if (rows.empty()) fail(Err::EmptySequence, "stack_rows: no rows");
  const int cols = static_cast<int>(rows[0]->value.cols());
  Mat v(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->value.rows() != 1 || rows[i]->value.cols() != cols)
      fail(Err::ShapeError, "stack_rows: every row must be 1 x C");
    v.row(static_cast<int>(i)) = rows[i]->value.row(0);
  }
  std::vector<Node*> parents(rows.begin(), rows.end());
  Node* out = t.make(std::move(v), parents, nullptr);
  out->back = [parents, out] {
    for (size_t i = 0; i < parents.size(); ++i)
      accum(parents[i], Mat(out->grad.row(static_cast<int>(i))));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* repeat_row(Tape& t, Node* r, int times) {
  if (r->value.rows() != 1) fail(Err::ShapeError, "repeat_row: input must be 1 x C");
  if (times < 1) fail(Err::ShapeError, "repeat_row: times must be positive");
  Node* out = t.make(Mat(r->value.replicate(times, 1)), {r}, nullptr);
  out->back = [r, out] { accum(r, Mat(out->grad.colwise().sum())); };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* reverse_rows(Tape& t, Node* x) {
  Node* out = t.make(Mat(x->value.colwise().reverse()), {x}, nullptr);
  out->back = [x, out] { accum(x, Mat(out->grad.colwise().reverse())); };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* gather_rows(Tape& t, Node* table, const std::vector<int>& ids) {
  if (ids.empty()) fail(Err::EmptySequence, "gather_rows: no indices");
  const int rows = static_cast<int>(table->value.rows());
  Mat v(static_cast<int>(ids.size()), table->value.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows)
      fail(Err::IndexOutOfRange, "gather_rows: index " + std::to_string(ids[i]));
    v.row(static_cast<int>(i)) = table->value.row(ids[i]);
  }
  Node* out = t.make(std::move(v), {table}, nullptr);
  out->back = [table, out, ids] {
    Mat g = Mat::Zero(table->value.rows(), table->value.cols());
    for (size_t i = 0; i < ids.size(); ++i) g.row(ids[i]) += out->grad.row(static_cast<int>(i));
    accum(table, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* expand_nn(Tape& t, Node* x, int target_len) {
  const int src_len = static_cast<int>(x->value.rows());
  if (src_len < 1 || target_len < 1) fail(Err::ShapeError, "expand_nn: empty sequence");
  std::vector<int> ids(static_cast<size_t>(target_len));
  for (int j = 0; j < target_len; ++j) {
    int s = static_cast<int>(std::floor((j + 0.5) * static_cast<double>(src_len) / target_len));
    ids[static_cast<size_t>(j)] = std::clamp(s, 0, src_len - 1);
  }
  Mat v(target_len, x->value.cols());
  for (int j = 0; j < target_len; ++j) v.row(j) = x->value.row(ids[static_cast<size_t>(j)]);
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out, ids] {
    Mat g = Mat::Zero(x->value.rows(), x->value.cols());
    for (size_t j = 0; j < ids.size(); ++j) g.row(ids[j]) += out->grad.row(static_cast<int>(j));
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* interp_linear(Tape& t, Node* x, int target_len) {
  const int src_len = static_cast<int>(x->value.rows());
  if (src_len < 1 || target_len < 1) fail(Err::ShapeError, "interp_linear: empty sequence");
  struct Tap {
    int lo, hi;
    float w_hi;
  };
  std::vector<Tap> taps(static_cast<size_t>(target_len));
  for (int j = 0; j < target_len; ++j) {
    double pos = (target_len == 1 || src_len == 1)
                     ? 0.0
                     : static_cast<double>(j) * (src_len - 1) / (target_len - 1);
    int lo = std::min(static_cast<int>(std::floor(pos)), src_len - 1);
    int hi = std::min(lo + 1, src_len - 1);
    taps[static_cast<size_t>(j)] = {lo, hi, static_cast<float>(pos - lo)};
  }
  Mat v(target_len, x->value.cols());
  for (int j = 0; j < target_len; ++j) {
    const Tap& tp = taps[static_cast<size_t>(j)];
    v.row(j) = (1.0f - tp.w_hi) * x->value.row(tp.lo) + tp.w_hi * x->value.row(tp.hi);
  }
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out, taps] {
    Mat g = Mat::Zero(x->value.rows(), x->value.cols());
    for (size_t j = 0; j < taps.size(); ++j) {
      g.row(taps[j].lo) += (1.0f - taps[j].w_hi) * out->grad.row(static_cast<int>(j));
      g.row(taps[j].hi) += taps[j].w_hi * out->grad.row(static_cast<int>(j));
    }
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* relu(Tape& t, Node* x) {
  Node* out = t.make(Mat(x->value.cwiseMax(0.0f)), {x}, nullptr);
  out->back = [x, out] {
    Mat mask = (x->value.array() > 0.0f).cast<float>();
    accum(x, Mat(out->grad.cwiseProduct(mask)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

namespace {
inline float sigmoid_s(float x) {
  return x >= 0.0f ? 1.0f / (1.0f + std::exp(-x)) : std::exp(x) / (1.0f + std::exp(x));
}
inline float softplus_s(float x) { return std::max(x, 0.0f) + std::log1p(std::exp(-std::abs(x))); }
}  // namespace

Node* sigmoid(Tape& t, Node* x) {
  Node* out = t.make(Mat(x->value.unaryExpr([](float v) { return sigmoid_s(v); })), {x}, nullptr);
  out->back = [x, out] {
    Mat d = out->value.array() * (1.0f - out->value.array());
    accum(x, Mat(out->grad.cwiseProduct(d)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* tanh_op(Tape& t, Node* x) {
  Node* out = t.make(Mat(x->value.array().tanh()), {x}, nullptr);
  out->back = [x, out] {
    Mat d = 1.0f - out->value.array().square();
    accum(x, Mat(out->grad.cwiseProduct(d)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* mish(Tape& t, Node* x) {
  Mat tsp = x->value.unaryExpr([](float v) { return std::tanh(softplus_s(v)); });
  Node* out = t.make(Mat(x->value.cwiseProduct(tsp)), {x}, nullptr);
  out->back = [x, out, tsp] {
    Mat sig = x->value.unaryExpr([](float v) { return sigmoid_s(v); });
    Mat d = tsp.array() + x->value.array() * (1.0f - tsp.array().square()) * sig.array();
    accum(x, Mat(out->grad.cwiseProduct(d)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* gelu(Tape& t, Node* x) {
  const float inv_sqrt2 = 1.0f / std::numbers::sqrt2_v<float>;
  Mat phi = x->value.unaryExpr([inv_sqrt2](float v) { return 0.5f * (1.0f + std::erf(v * inv_sqrt2)); });
  Node* out = t.make(Mat(x->value.cwiseProduct(phi)), {x}, nullptr);
  out->back = [x, out, phi] {
    const float inv_sqrt2pi = 0.3989422804014327f;
    Mat pdf = x->value.unaryExpr(
        [inv_sqrt2pi](float v) { return inv_sqrt2pi * std::exp(-0.5f * v * v); });
    Mat d = phi.array() + x->value.array() * pdf.array();
    accum(x, Mat(out->grad.cwiseProduct(d)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* swish(Tape& t, Node* x) {
  Mat sig = x->value.unaryExpr([](float v) { return sigmoid_s(v); });
  Node* out = t.make(Mat(x->value.cwiseProduct(sig)), {x}, nullptr);
  out->back = [x, out, sig] {
    Mat d = sig.array() * (1.0f + x->value.array() * (1.0f - sig.array()));
    accum(x, Mat(out->grad.cwiseProduct(d)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* glu_cols(Tape& t, Node* x) {
  const int c2 = static_cast<int>(x->value.cols());
  if (c2 % 2 != 0) fail(Err::OddFeatureDim, "glu_cols: channel count must be even");
  const int c = c2 / 2;
  Mat a = x->value.leftCols(c);
  Mat sg = x->value.rightCols(c).unaryExpr([](float v) { return sigmoid_s(v); });
  Node* out = t.make(Mat(a.cwiseProduct(sg)), {x}, nullptr);
  out->back = [x, out, a, sg, c] {
    Mat g = Mat::Zero(x->value.rows(), 2 * c);
    g.leftCols(c) = out->grad.cwiseProduct(sg);
    g.rightCols(c) =
        out->grad.cwiseProduct(a).cwiseProduct(Mat(sg.array() * (1.0f - sg.array())));
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* softmax_rows(Tape& t, Node* x) {
  Mat v = x->value;
  for (int r = 0; r < v.rows(); ++r) {
    Eigen::RowVectorXf row = v.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    v.row(r) = row / row.sum();
  }
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out] {
    Mat g(out->value.rows(), out->value.cols());
    for (int r = 0; r < g.rows(); ++r) {
      const float dot = out->grad.row(r).dot(out->value.row(r));
      g.row(r) = (out->grad.row(r).array() - dot) * out->value.row(r).array();
    }
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* dropout(Tape& t, Node* x, double p, std::mt19937_64* rng) {
  if (p <= 0.0 || rng == nullptr) return x;
  if (p >= 1.0) fail(Err::ShapeError, "dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const float inv = static_cast<float>(1.0 / (1.0 - p));
  Mat mask(x->value.rows(), x->value.cols());
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) mask(r, c) = keep(*rng) ? inv : 0.0f;
  Node* out = t.make(Mat(x->value.cwiseProduct(mask)), {x}, nullptr);
  out->back = [x, out, mask] { accum(x, Mat(out->grad.cwiseProduct(mask))); };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

namespace {

// Shared normalization core. When `per_row`, statistics run over each row's
// channels; otherwise over each column's time steps.
Node* norm_impl(Tape& t, Node* x, Node* gain, Node* bias, bool per_row) {
  const Mat& xs = x->value;
  const int rows = static_cast<int>(xs.rows()), cols = static_cast<int>(xs.cols());
  const int groups = per_row ? rows : cols;
  const int n = per_row ? cols : rows;
  if (n < 1) fail(Err::EmptySequence, "normalization over an empty axis");

  Mat xhat(rows, cols);
  Eigen::VectorXf inv_std(groups);
  for (int g = 0; g < groups; ++g) {
    Eigen::VectorXf grp = per_row ? Eigen::VectorXf(xs.row(g).transpose()) : Eigen::VectorXf(xs.col(g));
    const float mu = grp.mean();
    const float var = (grp.array() - mu).square().sum() / static_cast<float>(n);
    const float is = 1.0f / std::sqrt(var + kNormEps);
    inv_std(g) = is;
    Eigen::VectorXf nh = (grp.array() - mu) * is;
    if (per_row)
      xhat.row(g) = nh.transpose();
    else
      xhat.col(g) = nh;
  }

  Mat v = xhat;
  if (gain != nullptr) {
    if (per_row)
      v = (v.array().rowwise() * gain->value.row(0).array()).rowwise() +
          bias->value.row(0).array();
    else
      v = (v.array().rowwise() * gain->value.row(0).array()).rowwise() +
          bias->value.row(0).array();
  }

  std::vector<Node*> parents{x};
  if (gain != nullptr) {
    parents.push_back(gain);
    parents.push_back(bias);
  }
  Node* out = t.make(std::move(v), parents, nullptr);
  out->back = [x, gain, bias, out, xhat, inv_std, per_row, n] {
    // d(norm)/dx via the standard three-term expression per group.
    Mat dxhat = out->grad;
    if (gain != nullptr) {
      dxhat = dxhat.array().rowwise() * gain->value.row(0).array();
      accum(gain, Mat(out->grad.cwiseProduct(xhat).colwise().sum()));
      accum(bias, Mat(out->grad.colwise().sum()));
    }
    Mat gx(xhat.rows(), xhat.cols());
    const int groups = static_cast<int>(per_row ? xhat.rows() : xhat.cols());
    for (int g = 0; g < groups; ++g) {
      Eigen::ArrayXf dh = per_row ? Eigen::ArrayXf(dxhat.row(g).transpose().array())
                                  : Eigen::ArrayXf(dxhat.col(g).array());
      Eigen::ArrayXf xh = per_row ? Eigen::ArrayXf(xhat.row(g).transpose().array())
                                  : Eigen::ArrayXf(xhat.col(g).array());
      const float mean_dh = dh.mean();
      const float mean_dh_xh = (dh * xh).mean();
      Eigen::ArrayXf gxg = inv_std(g) * (dh - mean_dh - xh * mean_dh_xh);
      if (per_row)
        gx.row(g) = gxg.matrix().transpose();
      else
        gx.col(g) = gxg.matrix();
    }
    (void)n;
    accum(x, gx);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

}  // namespace

Node* layer_norm_rows(Tape& t, Node* x, Node* gain, Node* bias) {
  if (gain->value.rows() != 1 || gain->value.cols() != x->value.cols() ||
      bias->value.rows() != 1 || bias->value.cols() != x->value.cols())
    fail(Err::ShapeError, "layer_norm_rows: gain/bias must be 1 x cols(x)");
  return norm_impl(t, x, gain, bias, true);
}

Node* layer_norm_rows_plain(Tape& t, Node* x) { return norm_impl(t, x, nullptr, nullptr, true); }

Node* instance_norm_cols(Tape& t, Node* x, Node* gain, Node* bias) {
  if (gain->value.rows() != 1 || gain->value.cols() != x->value.cols() ||
      bias->value.rows() != 1 || bias->value.cols() != x->value.cols())
    fail(Err::ShapeError, "instance_norm_cols: gain/bias must be 1 x cols(x)");
  return norm_impl(t, x, gain, bias, false);
}

namespace {

// Padded source row for position s in a length-T sequence; -1 encodes a
// zero-padding tap.
inline int pad_src(int s, int len, PadMode pad) {
  if (s >= 0 && s < len) return s;
  return pad == PadMode::kReplicate ? std::clamp(s, 0, len - 1) : -1;
}

}  // namespace

Node* conv1d(Tape& t, Node* x, Node* w, Node* b, int kernel, PadMode pad) {
  const int len = static_cast<int>(x->value.rows());
  const int cin = static_cast<int>(x->value.cols());
  if (kernel < 1) fail(Err::ShapeError, "conv1d: kernel must be positive");
  if (w->value.rows() != static_cast<Eigen::Index>(kernel) * cin)
    fail(Err::ShapeError, "conv1d: weight rows must be kernel * in_channels");
  const int cout = static_cast<int>(w->value.cols());
  if (b->value.rows() != 1 || b->value.cols() != cout)
    fail(Err::ShapeError, "conv1d: bias must be 1 x out_channels");
  if (len < 1) fail(Err::EmptySequence, "conv1d: empty input");
  const int pad_l = (kernel - 1) / 2;

  Mat cols(len, kernel * cin);
  for (int tpos = 0; tpos < len; ++tpos)
    for (int j = 0; j < kernel; ++j) {
      const int s = pad_src(tpos + j - pad_l, len, pad);
      if (s < 0)
        cols.block(tpos, j * cin, 1, cin).setZero();
      else
        cols.block(tpos, j * cin, 1, cin) = x->value.row(s);
    }

  Mat v = cols * w->value;
  v.rowwise() += b->value.row(0);
  Node* out = t.make(std::move(v), {x, w, b}, nullptr);
  out->back = [x, w, b, out, cols, kernel, pad, pad_l, cin] {
    accum(w, Mat(cols.transpose() * out->grad));
    accum(b, Mat(out->grad.colwise().sum()));
    if (x->needs_grad) {
      const int len = static_cast<int>(x->value.rows());
      Mat gcols = out->grad * w->value.transpose();  // len x (kernel * cin)
      Mat gx = Mat::Zero(len, cin);
      for (int tpos = 0; tpos < len; ++tpos)
        for (int j = 0; j < kernel; ++j) {
          const int s = pad_src(tpos + j - pad_l, len, pad);
          if (s >= 0) gx.row(s) += gcols.block(tpos, j * cin, 1, cin);
        }
      accum(x, gx);
    }
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* depthwise_conv1d(Tape& t, Node* x, Node* w, Node* b, int kernel) {
  const int len = static_cast<int>(x->value.rows());
  const int c = static_cast<int>(x->value.cols());
  if (w->value.rows() != kernel || w->value.cols() != c)
    fail(Err::ShapeError, "depthwise_conv1d: weight must be kernel x channels");
  if (b->value.rows() != 1 || b->value.cols() != c)
    fail(Err::ShapeError, "depthwise_conv1d: bias must be 1 x channels");
  const int pad_l = (kernel - 1) / 2;

  Mat v = Mat::Zero(len, c);
  for (int tpos = 0; tpos < len; ++tpos)
    for (int j = 0; j < kernel; ++j) {
      const int s = tpos + j - pad_l;
      if (s >= 0 && s < len)
        v.row(tpos).array() += x->value.row(s).array() * w->value.row(j).array();
    }
  v.rowwise() += b->value.row(0);
  Node* out = t.make(std::move(v), {x, w, b}, nullptr);
  out->back = [x, w, b, out, kernel, pad_l] {
    const int len = static_cast<int>(x->value.rows());
    const int c = static_cast<int>(x->value.cols());
    Mat gw = Mat::Zero(kernel, c);
    Mat gx = Mat::Zero(len, c);
    for (int tpos = 0; tpos < len; ++tpos)
      for (int j = 0; j < kernel; ++j) {
        const int s = tpos + j - pad_l;
        if (s < 0 || s >= len) continue;
        gw.row(j).array() += out->grad.row(tpos).array() * x->value.row(s).array();
        gx.row(s).array() += out->grad.row(tpos).array() * w->value.row(j).array();
      }
    accum(w, gw);
    accum(b, Mat(out->grad.colwise().sum()));
    accum(x, gx);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* tconv1d_k2s2(Tape& t, Node* x, Node* w, Node* b) {
  const int len = static_cast<int>(x->value.rows());
  const int cin = static_cast<int>(x->value.cols());
  if (w->value.rows() != 2 * cin) fail(Err::ShapeError, "tconv1d: weight rows must be 2 * cin");
  const int cout = static_cast<int>(w->value.cols());
  if (b->value.rows() != 1 || b->value.cols() != cout)
    fail(Err::ShapeError, "tconv1d: bias must be 1 x out_channels");

  Mat even = x->value * w->value.topRows(cin);
  Mat odd = x->value * w->value.bottomRows(cin);
  Mat v(2 * len, cout);
  for (int i = 0; i < len; ++i) {
    v.row(2 * i) = even.row(i) + b->value.row(0);
    v.row(2 * i + 1) = odd.row(i) + b->value.row(0);
  }
  Node* out = t.make(std::move(v), {x, w, b}, nullptr);
  out->back = [x, w, b, out, cin, cout] {
    const int len = static_cast<int>(x->value.rows());
    Mat g_even(len, cout), g_odd(len, cout);
    for (int i = 0; i < len; ++i) {
      g_even.row(i) = out->grad.row(2 * i);
      g_odd.row(i) = out->grad.row(2 * i + 1);
    }
    Mat gw(2 * cin, cout);
    gw.topRows(cin) = x->value.transpose() * g_even;
    gw.bottomRows(cin) = x->value.transpose() * g_odd;
    accum(w, gw);
    accum(b, Mat(out->grad.colwise().sum()));
    accum(x, Mat(g_even * w->value.topRows(cin).transpose() +
                 g_odd * w->value.bottomRows(cin).transpose()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* maxpool_k2s2(Tape& t, Node* x) {
  const int len = static_cast<int>(x->value.rows());
  if (len % 2 != 0) fail(Err::ShapeError, "maxpool_k2s2: length must be even");
  const int half = len / 2;
  const int c = static_cast<int>(x->value.cols());
  Mat v(half, c);
  std::vector<uint8_t> take_second(static_cast<size_t>(half) * c);
  for (int i = 0; i < half; ++i)
    for (int j = 0; j < c; ++j) {
      const float a = x->value(2 * i, j), b = x->value(2 * i + 1, j);
      const bool second = b > a;
      take_second[static_cast<size_t>(i) * c + j] = second ? 1 : 0;
      v(i, j) = second ? b : a;
    }
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out, take_second, half, c] {
    Mat g = Mat::Zero(2 * half, c);
    for (int i = 0; i < half; ++i)
      for (int j = 0; j < c; ++j)
        g(2 * i + (take_second[static_cast<size_t>(i) * c + j] ? 1 : 0), j) = out->grad(i, j);
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

namespace {

// cos/sin tables for the rotary transform at dimensionality e (pairs k get
// angle pos * 10000^(-2k/e)).
void rope_tables(int len, int e, Mat& cost, Mat& sint) {
  const int pairs = e / 2;
  cost.resize(len, pairs);
  sint.resize(len, pairs);
  for (int k = 0; k < pairs; ++k) {
    const double freq = std::pow(10000.0, -2.0 * k / static_cast<double>(e));
    for (int pos = 0; pos < len; ++pos) {
      const double th = pos * freq;
      cost(pos, k) = static_cast<float>(std::cos(th));
      sint(pos, k) = static_cast<float>(std::sin(th));
    }
  }
}

}  // namespace

Node* rope(Tape& t, Node* x) {
  const int e = static_cast<int>(x->value.cols());
  if (e % 2 != 0) fail(Err::OddFeatureDim, "rope: feature dim must be even");
  const int len = static_cast<int>(x->value.rows());
  Mat cost, sint;
  rope_tables(len, e, cost, sint);
  Mat v(len, e);
  for (int k = 0; k < e / 2; ++k) {
    v.col(2 * k) = x->value.col(2 * k).cwiseProduct(cost.col(k)) -
                   x->value.col(2 * k + 1).cwiseProduct(sint.col(k));
    v.col(2 * k + 1) = x->value.col(2 * k).cwiseProduct(sint.col(k)) +
                       x->value.col(2 * k + 1).cwiseProduct(cost.col(k));
  }
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out, cost, sint, e] {
    Mat g(out->grad.rows(), e);
    for (int k = 0; k < e / 2; ++k) {
      g.col(2 * k) = out->grad.col(2 * k).cwiseProduct(cost.col(k)) +
                     out->grad.col(2 * k + 1).cwiseProduct(sint.col(k));
      g.col(2 * k + 1) = -out->grad.col(2 * k).cwiseProduct(sint.col(k)) +
                         out->grad.col(2 * k + 1).cwiseProduct(cost.col(k));
    }
    accum(x, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* sinusoidal_add(Tape& t, Node* x) {
  const int e = static_cast<int>(x->value.cols());
  if (e % 2 != 0) fail(Err::OddFeatureDim, "sinusoidal_add: feature dim must be even");
  Mat cost, sint;
  rope_tables(static_cast<int>(x->value.rows()), e, cost, sint);
  Mat v = x->value;
  for (int k = 0; k < e / 2; ++k) {
    v.col(2 * k) += sint.col(k);
    v.col(2 * k + 1) += cost.col(k);
  }
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out] { accum(x, out->grad); };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* rel_shift(Tape& t, Node* bd) {
  const int len = static_cast<int>(bd->value.rows());
  if (bd->value.cols() != 2 * len - 1)
    fail(Err::ShapeError, "rel_shift: expected T x (2T-1) scores");
  Mat v(len, len);
  for (int i = 0; i < len; ++i)
    for (int j = 0; j < len; ++j) v(i, j) = bd->value(i, j + len - 1 - i);
  Node* out = t.make(std::move(v), {bd}, nullptr);
  out->back = [bd, out, len] {
    Mat g = Mat::Zero(len, 2 * len - 1);
    for (int i = 0; i < len; ++i)
      for (int j = 0; j < len; ++j) g(i, j + len - 1 - i) = out->grad(i, j);
    accum(bd, g);
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* mean_all(Tape& t, Node* x) {
  if (x->value.size() == 0) fail(Err::EmptySequence, "mean_all: empty input");
  Mat v(1, 1);
  v(0, 0) = x->value.mean();
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out] {
    const float g = out->grad(0, 0) / static_cast<float>(x->value.size());
    accum(x, Mat(Mat::Constant(x->value.rows(), x->value.cols(), g)));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* sum_all(Tape& t, Node* x) {
  Mat v(1, 1);
  v(0, 0) = x->value.sum();
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out] {
    accum(x, Mat(Mat::Constant(x->value.rows(), x->value.cols(), out->grad(0, 0))));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* mean_rows(Tape& t, Node* x) {
  if (x->value.rows() == 0) fail(Err::EmptySequence, "mean_rows: empty input");
  Node* out = t.make(Mat(x->value.colwise().mean()), {x}, nullptr);
  out->back = [x, out] {
    const float inv = 1.0f / static_cast<float>(x->value.rows());
    accum(x, Mat(out->grad.replicate(x->value.rows(), 1) * inv));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* l1_to(Tape& t, Node* x, const Mat& target) {
  if (x->value.rows() != target.rows() || x->value.cols() != target.cols())
    fail(Err::ShapeError, "l1_to: target shape mismatch");
  Mat diff = x->value - target;
  Mat v(1, 1);
  v(0, 0) = diff.cwiseAbs().mean();
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out, diff] {
    Mat sgn = diff.unaryExpr([](float d) { return d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f); });
    accum(x, Mat(sgn * (out->grad(0, 0) / static_cast<float>(diff.size()))));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* l2_to(Tape& t, Node* x, const Mat& target) {
  if (x->value.rows() != target.rows() || x->value.cols() != target.cols())
    fail(Err::ShapeError, "l2_to: target shape mismatch");
  Mat diff = x->value - target;
  Mat v(1, 1);
  v(0, 0) = diff.array().square().mean();
  Node* out = t.make(std::move(v), {x}, nullptr);
  out->back = [x, out, diff] {
    accum(x, Mat(diff * (2.0f * out->grad(0, 0) / static_cast<float>(diff.size()))));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* spectral_norm(Tape& t, Node* w, Param* u, Param* v, int iters) {
  const int rows = static_cast<int>(w->value.rows());
  const int cols = static_cast<int>(w->value.cols());
  if (u->value.rows() != 1 || u->value.cols() != rows || v->value.rows() != 1 ||
      v->value.cols() != cols)
    fail(Err::ShapeError, "spectral_norm: u must be 1 x rows, v must be 1 x cols");

  // Power iteration on the persistent direction estimates; they are state,
  // not graph nodes, and never carry gradients.
  Eigen::VectorXf uv = u->value.row(0).transpose();
  Eigen::VectorXf vv = v->value.row(0).transpose();
  for (int i = 0; i < iters; ++i) {
    vv = w->value.transpose() * uv;
    vv /= std::max(vv.norm(), 1e-12f);
    uv = w->value * vv;
    uv /= std::max(uv.norm(), 1e-12f);
  }
  u->value.row(0) = uv.transpose();
  v->value.row(0) = vv.transpose();
  const float sigma = std::max(uv.dot(w->value * vv), 1e-12f);

  Node* out = t.make(Mat(w->value / sigma), {w}, nullptr);
  out->back = [w, out, uv, vv, sigma] {
    const float gdot = out->grad.cwiseProduct(out->value).sum();
    accum(w, Mat((out->grad - gdot * (uv * vv.transpose())) / sigma));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* pitch_loss_op(Tape& t, const Eigen::VectorXd& gt, Node* gen_col) {
  if (gen_col->value.cols() != 1) fail(Err::ShapeError, "pitch_loss_op: input must be M x 1");
  Eigen::VectorXd gen = gen_col->value.col(0).cast<double>();
  const double loss = pitch_loss(gt, gen);
  Mat v(1, 1);
  v(0, 0) = static_cast<float>(loss);
  Node* out = t.make(std::move(v), {gen_col}, nullptr);
  out->back = [gen_col, out, gt, gen] {
    Eigen::VectorXd g = pitch_loss_grad(gt, gen) * static_cast<double>(out->grad(0, 0));
    accum(gen_col, Mat(g.cast<float>()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

Node* repr_loss_op(Tape& t, const Eigen::MatrixXd& gt, Node* gen) {
  Eigen::MatrixXd gend = gen->value.cast<double>();
  const double loss = repr_loss(gt, gend);
  Mat v(1, 1);
  v(0, 0) = static_cast<float>(loss);
  Node* out = t.make(std::move(v), {gen}, nullptr);
  out->back = [gen, out, gt, gend] {
    Eigen::MatrixXd g = repr_loss_grad(gt, gend) * static_cast<double>(out->grad(0, 0));
    accum(gen, Mat(g.cast<float>()));
  };
  if (!out->needs_grad) out->back = nullptr;
  return out;
}

}  // namespace svs::nn

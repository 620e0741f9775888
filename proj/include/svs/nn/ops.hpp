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

#ifndef SVS_NN_OPS_HPP
#define SVS_NN_OPS_HPP

#include <random>
#include <span>
#include <vector>

#include "svs/nn/tape.hpp"

// Differentiable building blocks over the tape. Sequences are time-major
// (rows = frames, cols = channels); single vectors are 1 x C rows.
namespace svs::nn {

// Arithmetic.
Node* add(Tape& t, Node* a, Node* b);
Node* sub(Tape& t, Node* a, Node* b);
Node* mul(Tape& t, Node* a, Node* b);
Node* scale(Tape& t, Node* a, double s);
Node* add_scaled(Tape& t, Node* a, Node* b, double sb);  // a + sb * b
Node* add_rowvec(Tape& t, Node* x, Node* r);             // r broadcast over rows
Node* mul_rowvec(Tape& t, Node* x, Node* r);
Node* matmul(Tape& t, Node* a, Node* b);
Node* matmul_nt(Tape& t, Node* a, Node* b);  // a * b^T

// Shape surgery.
Node* slice_rows(Tape& t, Node* x, int r0, int n);
Node* slice_cols(Tape& t, Node* x, int c0, int n);
Node* concat_cols(Tape& t, Node* a, Node* b);
Node* concat_rows(Tape& t, Node* a, Node* b);
Node* stack_rows(Tape& t, std::span<Node* const> rows);  // each 1 x C
Node* repeat_row(Tape& t, Node* r, int times);
Node* reverse_rows(Tape& t, Node* x);
Node* gather_rows(Tape& t, Node* table, const std::vector<int>& ids);

// Length adaptation. expand_nn picks source row floor((j + 0.5) * T / M);
// interp_linear resamples with endpoints pinned (single-frame edge cases
// collapse to row 0).
Node* expand_nn(Tape& t, Node* x, int target_len);
Node* interp_linear(Tape& t, Node* x, int target_len);

// Activations.
Node* relu(Tape& t, Node* x);
Node* sigmoid(Tape& t, Node* x);
Node* tanh_op(Tape& t, Node* x);
Node* mish(Tape& t, Node* x);   // x * tanh(softplus(x))
Node* gelu(Tape& t, Node* x);   // exact erf form
Node* swish(Tape& t, Node* x);  // x * sigmoid(x)
Node* glu_cols(Tape& t, Node* x);
Node* softmax_rows(Tape& t, Node* x);
// Inverted dropout; identity when p == 0 or rng is null (eval mode).
Node* dropout(Tape& t, Node* x, double p, std::mt19937_64* rng);

// Normalization. layer_norm works per row over channels; instance_norm per
// column over time. gain/bias are 1 x C.
Node* layer_norm_rows(Tape& t, Node* x, Node* gain, Node* bias);
Node* layer_norm_rows_plain(Tape& t, Node* x);
Node* instance_norm_cols(Tape& t, Node* x, Node* gain, Node* bias);

// Convolutions, stride 1, length preserving unless stated. Weights use the
// unrolled layout (kernel * Cin) x Cout; depthwise weights are kernel x C.
enum class PadMode { kZero, kReplicate };
Node* conv1d(Tape& t, Node* x, Node* w, Node* b, int kernel, PadMode pad);
Node* depthwise_conv1d(Tape& t, Node* x, Node* w, Node* b, int kernel);
// Transposed conv, kernel 2 stride 2, T -> 2T. Weight (2 * Cin) x Cout holds
// the even-phase block on top of the odd-phase block.
Node* tconv1d_k2s2(Tape& t, Node* x, Node* w, Node* b);
Node* maxpool_k2s2(Tape& t, Node* x);

// Positions. rope rotates consecutive feature pairs by pos * 10000^(-2k/E);
// sinusoidal_add is the additive fallback; rel_shift turns relative-offset
// scores (T x (2T-1), column j <-> offset T-1-j) into T x T absolute scores.
Node* rope(Tape& t, Node* x);
Node* sinusoidal_add(Tape& t, Node* x);
Node* rel_shift(Tape& t, Node* bd);

// Reductions and distances to constant targets.
Node* mean_all(Tape& t, Node* x);
Node* sum_all(Tape& t, Node* x);
Node* mean_rows(Tape& t, Node* x);  // T x C -> 1 x C
Node* l1_to(Tape& t, Node* x, const Mat& target);
Node* l2_to(Tape& t, Node* x, const Mat& target);

// Weight / sigma_max with a persistent 1-step power iteration; u (1 x rows)
// and v (1 x cols) buffers advance on every call.
Node* spectral_norm(Tape& t, Node* w, Param* u, Param* v, int iters = 1);

// Double-precision objective bridges (values and gradients computed with the
// scalar pitch machinery, chained into the float graph).
Node* pitch_loss_op(Tape& t, const Eigen::VectorXd& gt, Node* gen_col);  // gen: M x 1
Node* repr_loss_op(Tape& t, const Eigen::MatrixXd& gt, Node* gen);

}  // namespace svs::nn

#endif  // SVS_NN_OPS_HPP

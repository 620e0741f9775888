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

#ifndef SVS_PITCH_OBJECTIVE_HPP
#define SVS_PITCH_OBJECTIVE_HPP

#include <Eigen/Core>
#include <complex>
#include <random>
#include <vector>

#include "svs/tensor_file.hpp"

namespace svs {

using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

// Multi-resolution pitch comparison loss. Two contours are smoothed into
// windowed means at every proper-divisor window size of their length, each
// smoothed series is DFT'd, and the complex spectra are compared with an L1
// distance over bin moduli:
//
//   loss = ln(eps + sum_i sum_k |DFT(means(gt, div_i))[k] - DFT(means(gen, div_i))[k]|)
//
// The epsilon floor keeps the loss finite (and its gradient zero) at a
// perfect match. All of this runs in double precision.
inline constexpr double kPitchLossEps = 1e-8;

// Divisors d of n with 1 < d < n, ascending. When that set is empty (n prime
// or n <= 3) the fallback {n} is returned so every contour length still
// yields a defined loss; window n reduces the series to its global mean.
std::vector<int> proper_divisors(int n);

// Non-overlapping block means: out[k] = mean(x[k*w .. k*w+w-1]). w must
// divide x's length.
VecD windowed_means(const VecD& x, int w);

// Full complex spectrum X[k] = sum_t x[t] exp(-2*pi*i*k*t/m), no
// normalization. Mixed-radix Cooley-Tukey with a direct-summation fallback
// for prime lengths.
std::vector<std::complex<double>> dft(const VecD& x);

// Loss and its gradient with respect to `gen`. The gradient at bins with an
// exactly zero complex difference uses subgradient 0.
double pitch_loss(const VecD& gt, const VecD& gen);
VecD pitch_loss_grad(const VecD& gt, const VecD& gen);

// The same loss applied per channel (each column treated as a contour),
// averaged over channels; gradient with respect to `gen`.
double repr_loss(const MatD& gt, const MatD& gen);
MatD repr_loss_grad(const MatD& gt, const MatD& gen);

// f0/100 plus i.i.d. Uniform(-0.01, 0.01) dither per frame when rng is
// given; pass nullptr to disable the noise.
Vec normalize_pitch(const Vec& f0_hz, std::mt19937_64* rng);

}  // namespace svs

#endif  // SVS_PITCH_OBJECTIVE_HPP

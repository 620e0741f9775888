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

#include "svs/pitch_objective.hpp"

#include <cmath>
#include <numbers>

#include "svs/error.hpp"

namespace svs {

namespace {

using cplx = std::complex<double>;

size_t smallest_factor(size_t m) {
  for (size_t p = 2; p * p <= m; ++p)
    if (m % p == 0) return p;
  return m;
}

std::vector<cplx> dft_direct(const std::vector<cplx>& x) {
  const size_t m = x.size();
  std::vector<cplx> out(m);
  const double w = -2.0 * std::numbers::pi / static_cast<double>(m);
  for (size_t k = 0; k < m; ++k) {
    cplx acc = 0.0;
    for (size_t t = 0; t < m; ++t) acc += x[t] * std::polar(1.0, w * static_cast<double>(k * t));
    out[k] = acc;
  }
  return out;
}

// Decimation in time over the smallest prime factor p:
//   X[k] = sum_r exp(-2*pi*i*k*r/m) * DFT_q(x[r::p])[k mod q],  q = m/p
std::vector<cplx> dft_mixed_radix(const std::vector<cplx>& x) {
  const size_t m = x.size();
  if (m <= 1) return x;
  const size_t p = smallest_factor(m);
  if (p == m) return dft_direct(x);
  const size_t q = m / p;

  std::vector<std::vector<cplx>> sub(p);
  for (size_t r = 0; r < p; ++r) {
    sub[r].resize(q);
    for (size_t s = 0; s < q; ++s) sub[r][s] = x[p * s + r];
    sub[r] = dft_mixed_radix(sub[r]);
  }

  std::vector<cplx> out(m);
  const double w = -2.0 * std::numbers::pi / static_cast<double>(m);
  for (size_t k = 0; k < m; ++k) {
    cplx acc = 0.0;
    for (size_t r = 0; r < p; ++r)
      acc += std::polar(1.0, w * static_cast<double>(k * r)) * sub[r][k % q];
    out[k] = acc;
  }
  return out;
}

void check_pair(const VecD& gt, const VecD& gen) {
  if (gt.size() != gen.size())
    fail(Err::LengthMismatch, "pitch pair lengths " + std::to_string(gt.size()) + " vs " +
                                  std::to_string(gen.size()));
  if (gt.size() < 2) fail(Err::LengthMismatch, "pitch pair needs at least 2 frames");
}

}  // namespace

std::vector<int> proper_divisors(int n) {
  std::vector<int> divs;
  for (int d = 2; d < n; ++d)
    if (n % d == 0) divs.push_back(d);
  if (divs.empty()) divs.push_back(n);
  return divs;
}

VecD windowed_means(const VecD& x, int w) {
  if (w < 1 || x.size() % w != 0)
    fail(Err::NonDividingWindow,
         "window " + std::to_string(w) + " does not divide length " + std::to_string(x.size()));
  const Eigen::Index m = x.size() / w;
  VecD out(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double acc = 0.0;
    for (int j = 0; j < w; ++j) acc += x(k * w + j);
    out(k) = acc / w;
  }
  return out;
}

std::vector<std::complex<double>> dft(const VecD& x) {
  std::vector<cplx> in(static_cast<size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) in[static_cast<size_t>(i)] = x(i);
  return dft_mixed_radix(in);
}

double pitch_loss(const VecD& gt, const VecD& gen) {
  check_pair(gt, gen);
  double s = 0.0;
  for (int d : proper_divisors(static_cast<int>(gt.size()))) {
    const auto spec_gt = dft(windowed_means(gt, d));
    const auto spec_gen = dft(windowed_means(gen, d));
    for (size_t k = 0; k < spec_gt.size(); ++k) s += std::abs(spec_gt[k] - spec_gen[k]);
  }
  return std::log(kPitchLossEps + s);
}

VecD pitch_loss_grad(const VecD& gt, const VecD& gen) {
  check_pair(gt, gen);
  const Eigen::Index n = gen.size();
  VecD grad_s = VecD::Zero(n);
  double s = 0.0;

  for (int d : proper_divisors(static_cast<int>(n))) {
    const VecD mg = windowed_means(gt, d);
    const VecD mh = windowed_means(gen, d);
    const auto spec_gt = dft(mg);
    const auto spec_gen = dft(mh);
    const size_t m = spec_gt.size();
    const double w = 2.0 * std::numbers::pi / static_cast<double>(m);

    // d|diff[k]|/d means_gen[j] = Re(unit(diff[k])) * (-cos) + Im * (+sin),
    // then each mean spreads 1/d onto its window.
    std::vector<double> psi(m, 0.0);
    for (size_t k = 0; k < m; ++k) {
      const cplx diff = spec_gt[k] - spec_gen[k];
      const double mod = std::abs(diff);
      s += mod;
      if (mod == 0.0) continue;
      const double re = diff.real() / mod, im = diff.imag() / mod;
      for (size_t j = 0; j < m; ++j) {
        const double th = w * static_cast<double>(k * j);
        psi[j] += -re * std::cos(th) + im * std::sin(th);
      }
    }
    for (Eigen::Index t = 0; t < n; ++t)
      grad_s(t) += psi[static_cast<size_t>(t / d)] / static_cast<double>(d);
  }
  return grad_s / (kPitchLossEps + s);
}

double repr_loss(const MatD& gt, const MatD& gen) {
  if (gt.rows() != gen.rows() || gt.cols() != gen.cols())
    fail(Err::ShapeError, "repr_loss shapes differ");
  double acc = 0.0;
  for (Eigen::Index c = 0; c < gt.cols(); ++c) acc += pitch_loss(gt.col(c), gen.col(c));
  return acc / static_cast<double>(gt.cols());
}

MatD repr_loss_grad(const MatD& gt, const MatD& gen) {
  if (gt.rows() != gen.rows() || gt.cols() != gen.cols())
    fail(Err::ShapeError, "repr_loss shapes differ");
  MatD grad(gen.rows(), gen.cols());
  for (Eigen::Index c = 0; c < gt.cols(); ++c)
    grad.col(c) = pitch_loss_grad(gt.col(c), gen.col(c)) / static_cast<double>(gt.cols());
  return grad;
}

Vec normalize_pitch(const Vec& f0_hz, std::mt19937_64* rng) {
  Vec out = f0_hz / 100.0f;
  if (rng != nullptr) {
    std::uniform_real_distribution<float> noise(-0.01f, 0.01f);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += noise(*rng);
  }
  return out;
}

}  // namespace svs

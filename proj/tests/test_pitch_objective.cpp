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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "svs/error.hpp"
#include "svs/pitch_objective.hpp"

using namespace svs;

namespace {

// Brute-force reference, written independently of the library: explicit
// divisor scan, block means, and a direct O(m^2) DFT summation.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const size_t m = x.size();
  std::vector<std::complex<double>> out(m);
  for (size_t k = 0; k < m; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < m; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(m);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

double brute_force_pitch_loss(const VecD& gt, const VecD& gen) {
  const int n = static_cast<int>(gt.size());
  std::vector<int> divs;
  for (int d = 2; d < n; ++d)
    if (n % d == 0) divs.push_back(d);
  if (divs.empty()) divs.push_back(n);

  double total = 0.0;
  for (int d : divs) {
    const int m = n / d;
    std::vector<double> mg(m), mh(m);
    for (int k = 0; k < m; ++k) {
      double sg = 0.0, sh = 0.0;
      for (int j = 0; j < d; ++j) {
        sg += gt(k * d + j);
        sh += gen(k * d + j);
      }
      mg[k] = sg / d;
      mh[k] = sh / d;
    }
    auto sg = naive_dft(mg);
    auto sh = naive_dft(mh);
    for (int k = 0; k < m; ++k) total += std::abs(sg[k] - sh[k]);
  }
  return std::log(1e-8 + total);
}

VecD random_contour(int n, uint64_t seed, double lo = 0.5, double hi = 4.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  VecD v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

}  // namespace

TEST_CASE("proper divisors exclude 1 and n, primes fall back to {n}") {
  CHECK(proper_divisors(12) == std::vector<int>{2, 3, 4, 6});
  CHECK(proper_divisors(7) == std::vector<int>{7});
  CHECK(proper_divisors(4) == std::vector<int>{2});
  CHECK(proper_divisors(2) == std::vector<int>{2});
  CHECK(proper_divisors(3) == std::vector<int>{3});
  CHECK(proper_divisors(6) == std::vector<int>{2, 3});
  CHECK(proper_divisors(36) == std::vector<int>{2, 3, 4, 6, 9, 12, 18});
}

TEST_CASE("windowed means are non-overlapping block averages") {
  VecD x(4);
  x << 1, 2, 3, 4;
  VecD m = windowed_means(x, 2);
  REQUIRE(m.size() == 2);
  CHECK(m(0) == doctest::Approx(1.5));
  CHECK(m(1) == doctest::Approx(3.5));

  VecD y(6);
  y << 1, 2, 3, 4, 5, 6;
  VecD m3 = windowed_means(y, 3);
  CHECK(m3(0) == doctest::Approx(2.0));
  CHECK(m3(1) == doctest::Approx(5.0));

  CHECK((windowed_means(y, 1) - y).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(windowed_means(x, 3), Error);
  CHECK_THROWS_AS(windowed_means(x, 0), Error);
}

TEST_CASE("windowed means preserve the global mean") {
  VecD x = random_contour(24, 7);
  for (int w : {2, 3, 4, 6, 8, 12}) {
    VecD m = windowed_means(x, w);
    CHECK(m.mean() == doctest::Approx(x.mean()).epsilon(1e-12));
  }
}

TEST_CASE("dft known spectra") {
  VecD c(4);
  c << 2, 2, 2, 2;
  auto spec = dft(c);
  CHECK(std::abs(spec[0] - std::complex<double>(8.0, 0.0)) < 1e-12);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(spec[k]) < 1e-12);

  VecD imp(4);
  imp << 1, 0, 0, 0;
  auto si = dft(imp);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(si[k] - std::complex<double>(1.0, 0.0)) < 1e-12);

  VecD sine(4);
  sine << 0, 1, 0, -1;
  auto ss = dft(sine);
  CHECK(std::abs(ss[1] - std::complex<double>(0.0, -2.0)) < 1e-12);
  CHECK(std::abs(ss[3] - std::complex<double>(0.0, 2.0)) < 1e-12);
}

TEST_CASE("dft agrees with direct summation for every length up to 64") {
  for (int n = 1; n <= 64; ++n) {
    VecD x = random_contour(n, 1000 + static_cast<uint64_t>(n), -2.0, 2.0);
    std::vector<double> xv(x.data(), x.data() + n);
    auto got = dft(x);
    auto want = naive_dft(xv);
    REQUIRE(got.size() == static_cast<size_t>(n));
    double scale = 0.0;
    for (auto& w : want) scale = std::max(scale, std::abs(w));
    for (int k = 0; k < n; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("dft is linear and satisfies the power identity") {
  VecD a = random_contour(12, 5, -1, 1), b = random_contour(12, 6, -1, 1);
  auto sa = dft(a), sb = dft(b), sum = dft(VecD(2.0 * a + b));
  for (int k = 0; k < 12; ++k) CHECK(std::abs(sum[k] - (2.0 * sa[k] + sb[k])) < 1e-10);

  // sum |x|^2 == (1/m) sum |X|^2
  double time_e = a.squaredNorm(), freq_e = 0.0;
  for (auto& v : sa) freq_e += std::norm(v);
  CHECK(time_e == doctest::Approx(freq_e / 12.0).epsilon(1e-9));
}

TEST_CASE("pitch loss floor and hand-evaluated case") {
  VecD a = random_contour(12, 9);
  CHECK(pitch_loss(a, a) == doctest::Approx(std::log(1e-8)).epsilon(1e-12));
  CHECK(pitch_loss(a, a) == doctest::Approx(-18.420680744).epsilon(1e-9));

  VecD gt(4), gen(4);
  gt << 1, 1, 1, 1;
  gen << 0, 0, 0, 0;
  CHECK(pitch_loss(gt, gen) == doctest::Approx(std::log(2.0 + 1e-8)).epsilon(1e-12));
  CHECK(pitch_loss(gt, gen) == doctest::Approx(0.6931).epsilon(1e-4));
}

TEST_CASE("pitch loss is symmetric in its arguments") {
  for (int n : {4, 7, 12, 30}) {
    VecD a = random_contour(n, 20 + static_cast<uint64_t>(n));
    VecD b = random_contour(n, 40 + static_cast<uint64_t>(n));
    CHECK(pitch_loss(a, b) == pitch_loss(b, a));
  }
}

TEST_CASE("pitch loss equals the brute-force evaluation for all lengths up to 64") {
  for (int n = 2; n <= 64; ++n) {
    VecD a = random_contour(n, 100 + static_cast<uint64_t>(n));
    VecD b = random_contour(n, 200 + static_cast<uint64_t>(n));
    const double got = pitch_loss(a, b);
    const double want = brute_force_pitch_loss(a, b);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("pitch loss input validation") {
  VecD a(4), b(3);
  a.setOnes();
  b.setOnes();
  try {
    pitch_loss(a, b);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Err::LengthMismatch);
  }
  VecD one(1);
  one.setOnes();
  CHECK_THROWS_AS(pitch_loss(one, one), Error);
}

namespace {

void check_grad_fd(const VecD& gt, const VecD& gen) {
  const VecD grad = pitch_loss_grad(gt, gen);
  const double h = 1e-4;
  for (int t = 0; t < gen.size(); ++t) {
    VecD up = gen, dn = gen;
    up(t) += h;
    dn(t) -= h;
    const double fd = (pitch_loss(gt, up) - pitch_loss(gt, dn)) / (2.0 * h);
    if (std::abs(grad(t)) > 1e-6) {
      CHECK(std::abs(fd - grad(t)) / std::abs(grad(t)) < 1e-4);
    } else {
      CHECK(std::abs(fd) < 1e-3);
    }
  }
}

}  // namespace

TEST_CASE("gradient vanishes at the floor and matches finite differences elsewhere") {
  VecD a = random_contour(12, 77);
  CHECK(pitch_loss_grad(a, a).cwiseAbs().maxCoeff() == 0.0);

  VecD gt(4), gen(4);
  gt << 1, 1, 1, 1;
  gen << 0, 0, 0, 0;
  check_grad_fd(gt, gen);

  check_grad_fd(random_contour(24, 300), random_contour(24, 301));
  check_grad_fd(random_contour(7, 302), random_contour(7, 303));   // prime fallback
  check_grad_fd(random_contour(36, 304), random_contour(36, 305));  // many divisors
}

TEST_CASE("per-channel loss averages the per-column pitch losses") {
  MatD gt(8, 3), gen(8, 3);
  for (int c = 0; c < 3; ++c) {
    gt.col(c) = random_contour(8, 400 + static_cast<uint64_t>(c));
    gen.col(c) = random_contour(8, 500 + static_cast<uint64_t>(c));
  }
  double manual = 0.0;
  for (int c = 0; c < 3; ++c) manual += pitch_loss(gt.col(c), gen.col(c));
  manual /= 3.0;
  CHECK(repr_loss(gt, gen) == doctest::Approx(manual).epsilon(1e-12));

  // Gradient: finite differences on a few coordinates.
  MatD grad = repr_loss_grad(gt, gen);
  const double h = 1e-4;
  for (auto [r, c] : {std::pair{0, 0}, {3, 1}, {7, 2}}) {
    MatD up = gen, dn = gen;
    up(r, c) += h;
    dn(r, c) -= h;
    const double fd = (repr_loss(gt, up) - repr_loss(gt, dn)) / (2.0 * h);
    CHECK(fd == doctest::Approx(grad(r, c)).epsilon(1e-3));
  }

  CHECK_THROWS_AS(repr_loss(gt, MatD(8, 2)), Error);
}

TEST_CASE("pitch normalization divides by 100 and dithers when an rng is given") {
  Vec f0(3);
  f0 << 200.0f, 0.0f, 440.0f;
  Vec quiet = normalize_pitch(f0, nullptr);
  CHECK(quiet(0) == doctest::Approx(2.0f));
  CHECK(quiet(1) == 0.0f);
  CHECK(quiet(2) == doctest::Approx(4.4f));

  Vec zeros = normalize_pitch(Vec(Vec::Zero(5)), nullptr);
  CHECK(zeros.cwiseAbs().maxCoeff() == 0.0f);

  std::mt19937_64 r1(99), r2(99), r3(100);
  Vec n1 = normalize_pitch(f0, &r1);
  Vec n2 = normalize_pitch(f0, &r2);
  Vec n3 = normalize_pitch(f0, &r3);
  CHECK((n1 - n2).cwiseAbs().maxCoeff() == 0.0f);  // same seed, same dither
  CHECK((n1 - n3).cwiseAbs().maxCoeff() > 0.0f);
  CHECK((n1 - quiet).cwiseAbs().maxCoeff() <= 0.01f);
  CHECK((n1 - quiet).cwiseAbs().maxCoeff() > 0.0f);
}

// Copyright 2026 The vskin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Branch-free sine and cosine − 1 that the compiler can vectorize.
// Cody–Waite reduction by π/2 followed by the fdlibm kernel polynomials on
// [−π/4, π/4]. A couple of ulp from the libm result for |t| < 1e6; larger
// arguments lose accuracy. Explicit fma keeps the bits the same whether or
// not the target has fused multiply-add.

#pragma once

#include <cmath>

namespace vskin {

struct SinCosM1 {
  double sin;
  double cos_minus_one;
};

// Polynomials only; valid for |x| ≤ π/4, where sin_cos_m1 returns the same
// bits.
[[gnu::always_inline]] inline SinCosM1 sin_cos_m1_reduced(double x) {
  constexpr double kS1 = -1.66666666666666324348e-01;
  constexpr double kS2 = 8.33333333332248946124e-03;
  constexpr double kS3 = -1.98412698298579493134e-04;
  constexpr double kS4 = 2.75573137070700676789e-06;
  constexpr double kS5 = -2.50507602534068634195e-08;
  constexpr double kS6 = 1.58969099521155010221e-10;
  constexpr double kC1 = 4.16666666666666019037e-02;
  constexpr double kC2 = -1.38888888888741095749e-03;
  constexpr double kC3 = 2.48015872894767294178e-05;
  constexpr double kC4 = -2.75573143513906633035e-07;
  constexpr double kC5 = 2.08757232129817482790e-09;
  constexpr double kC6 = -1.13596475577881948265e-11;

  const double z = x * x;
  // Estrin evaluation keeps the dependency chains short.
  const double z2 = z * z;
  const double sp = std::fma(
      z2, std::fma(z2, std::fma(z, kS6, kS5), std::fma(z, kS4, kS3)),
      std::fma(z, kS2, kS1));
  const double cp = std::fma(
      z2, std::fma(z2, std::fma(z, kC6, kC5), std::fma(z, kC4, kC3)),
      std::fma(z, kC2, kC1));
  return {std::fma(x * z, sp, x), std::fma(z2, cp, -0.5 * z)};
}

// Below this |t| the reduction is the identity.
inline constexpr double kSinCosReducedLimit = 0.78;

[[gnu::always_inline]] inline SinCosM1 sin_cos_m1(double t) {
  constexpr double kTwoOverPi = 6.36619772367581382433e-01;
  constexpr double kRound = 6755399441055744.0;  // 1.5 · 2^52
  // π/2 split in 33-bit pieces, so n · piece is exact for |n| < 2^20.
  constexpr double kPio2Hi = 1.57079632673412561417e+00;
  constexpr double kPio2Mid = 6.07710050630396597660e-11;
  constexpr double kPio2Lo = 2.02226624879595063154e-21;

  const double n = (t * kTwoOverPi + kRound) - kRound;
  const double x = ((t - n * kPio2Hi) - n * kPio2Mid) - n * kPio2Lo;
  const SinCosM1 r = sin_cos_m1_reduced(x);
  const double s = r.sin;
  const double cm = r.cos_minus_one;
  const double c = 1.0 + cm;

  // Quadrant n mod 4; n / 4 − 0.375 never ties, so rounding gives floor.
  const double quarter = ((n * 0.25 - 0.375) + kRound) - kRound;
  const double q = n - 4.0 * quarter;

  const double sn = q == 0.0 ? s : q == 1.0 ? c : q == 2.0 ? -s : -c;
  const double cm1 = q == 0.0   ? cm
                     : q == 1.0 ? -s - 1.0
                     : q == 2.0 ? -(2.0 + cm)
                                : s - 1.0;
  return {sn, cm1};
}

}  // namespace vskin

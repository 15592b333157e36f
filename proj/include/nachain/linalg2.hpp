#pragma once

#include <array>
#include <complex>

namespace nachain {

using Mat2 = std::array<std::complex<double>, 4>;  // row-major

// exp(t M) for a 2x2 complex matrix through exp(mu t)[cosh(d t) I + sinh(d t)/d (M - mu I)].
inline Mat2 expm2(const Mat2& M, double t) {
  using C = std::complex<double>;
  const C mu = 0.5 * (M[0] + M[3]);
  const C a = M[0] - mu;
  const C z2 = (a * a + M[1] * M[2]) * (t * t);  // (d t)^2; both branches of d give the same result
  // ch = e^{mu t} cosh(z), sh = e^{mu t} sinh(z)/z, combined so that large t does not overflow
  C ch, sh;
  if (std::abs(z2) < 1e-6) {
    const C e = std::exp(mu * t);
    ch = e * (1.0 + z2 / 2.0 + z2 * z2 / 24.0 + z2 * z2 * z2 / 720.0);
    sh = e * (1.0 + z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0);
  } else {
    C z = std::sqrt(z2);
    if (z.real() < 0.0) z = -z;
    const C ep = std::exp(mu * t + z), em = std::exp(mu * t - z);
    ch = 0.5 * (ep + em);
    sh = 0.5 * (ep - em) / z;
  }
  return {ch + sh * t * a, sh * t * M[1], sh * t * M[2], ch - sh * t * a};
}

}  // namespace nachain

#pragma once

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace nachain {

struct ModelParams {
  double alpha = 1.0;
  double gamma = 1.0;

  // alpha = 0 is allowed for the gradient-type special case.
  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("alpha must be nonnegative and finite");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("gamma must be positive and finite");
  }
};

// Representative of k on [-1/2, 1/2]; ties at the boundary go to even.
template <std::floating_point T>
T reduce_torus(T k) {
  return k - std::nearbyint(k);
}

template <std::floating_point T>
inline T sinpi(T x) {
  return std::sin(std::numbers::pi_v<T> * x);
}

template <std::floating_point T>
inline T cospi(T x) {
  return std::cos(std::numbers::pi_v<T> * x);
}

template <std::floating_point T>
T dispersion(T k, const ModelParams& p) {
  T s = sinpi(k);
  return T(2) * std::sqrt(T(p.alpha)) * s * s;
}

// Angular frequency of psi-hat under dk = -Lap p, dp = alpha Lap k.
// It is twice dispersion().
template <std::floating_point T>
T wave_frequency(T k, const ModelParams& p) {
  return T(2) * dispersion(k, p);
}

template <std::floating_point T>
T noise_rate(T k) {
  T s = sinpi(k), c = cospi(k);
  return T(2) * s * s * (T(1) + T(2) * c * c);
}

template <std::floating_point T>
std::pair<T, T> noise_rate_derivs(T k) {
  constexpr T pi = std::numbers::pi_v<T>;
  T c2 = cospi(T(2) * k);
  return {T(2) * pi * (sinpi(T(2) * k) + sinpi(T(4) * k)),
          T(4) * pi * pi * (T(4) * c2 * c2 + c2 - T(2))};
}

template <std::floating_point T>
T coupling_r(T k, T kp) {
  return T(4) * sinpi(k) * sinpi(k - kp) * sinpi(T(2) * k - kp);
}

template <std::floating_point T>
struct Basis {
  T e_plus, e_minus, f_plus, f_minus, one;
};

template <std::floating_point T>
Basis<T> basis_functions(T k) {
  T s = sinpi(k), c = cospi(k), s2 = sinpi(T(2) * k);
  return {T(8) / T(3) * s * s * s * s, T(2) * s2 * s2, T(2) * s * s, T(2) * c * c, T(1)};
}

// Fourier symbol of the kernel {6 at 0, -2 at +-1, -1 at +-2}.
template <std::floating_point T>
T beta_hat(T k) {
  return T(6) - T(4) * cospi(T(2) * k) - T(2) * cospi(T(4) * k);
}

template <std::floating_point T>
T scattering_kernel_direct(T k, T kp, T eta) {
  T a = k - eta / T(2), b = k + eta / T(2);
  return T(0.5) * (coupling_r(a, k - kp) * coupling_r(b, k - kp) +
                   coupling_r(a, k + kp) * coupling_r(b, k + kp));
}

// R0 - S R1 + S^2 R2 with S = sin^2(pi eta/2).
template <std::floating_point T>
T scattering_kernel_decomposed(T k, T kp, T eta) {
  auto u = basis_functions(k), v = basis_functions(kp);
  T S = sinpi(eta / T(2));
  S *= S;
  T r0 = T(0.75) * (u.e_minus * v.e_plus + u.e_plus * v.e_minus);
  T r1 = T(16) * u.f_plus * v.f_plus + u.f_plus * v.e_minus + u.e_minus * v.f_plus +
         T(3) * u.f_minus * v.e_plus + T(3) * u.e_plus * v.f_minus;
  T r2 = T(32) * (u.f_plus + v.f_plus) +
         T(4) * (T(4) * u.f_plus * v.f_plus + u.f_plus * v.f_minus + u.f_minus * v.f_plus) -
         T(32) * S * (u.f_plus + v.f_plus + T(2)) + T(64) * S * S;
  return r0 - S * r1 + S * S * r2;
}

template <std::floating_point T>
struct KernelPair {
  T direct;
  T decomposed;
  T abs_diff() const { return std::abs(direct - decomposed); }
};

template <std::floating_point T>
KernelPair<T> scattering_kernel(T k, T kp, T eta) {
  return {scattering_kernel_direct(k, kp, eta), scattering_kernel_decomposed(k, kp, eta)};
}

// Projections of f onto the rank-5 basis, used to apply the scattering
// operator without forming the kernel matrix.
template <class T>
struct BasisProjections {
  T e_plus{}, e_minus{}, f_plus{}, f_minus{}, one{};
};

// (Rf)(k) = sum over basis of kernel coefficients times projections of f.
template <class V, std::floating_point T>
V apply_decomposed(const Basis<T>& u, const BasisProjections<V>& P, T S) {
  V r0 = T(0.75) * (u.e_minus * P.e_plus + u.e_plus * P.e_minus);
  V r1 = T(16) * u.f_plus * P.f_plus + u.f_plus * P.e_minus + u.e_minus * P.f_plus +
         T(3) * u.f_minus * P.e_plus + T(3) * u.e_plus * P.f_minus;
  V r2 = T(32) * (u.f_plus * P.one + P.f_plus) +
         T(4) * (T(4) * u.f_plus * P.f_plus + u.f_plus * P.f_minus + u.f_minus * P.f_plus) -
         T(32) * S * (u.f_plus * P.one + P.f_plus + T(2) * P.one) + T(64) * S * S * P.one;
  return r0 - S * r1 + S * S * r2;
}

}  // namespace nachain

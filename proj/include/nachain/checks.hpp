#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "nachain/kernels.hpp"

namespace nachain {

struct KernelReport {
  std::size_t samples = 0, grid = 0;
  double kernel_diff = 0;       // max |direct - decomposed|
  double beta_vs_rate = 0;      // max |beta_hat - 4R|
  double rate_vs_basis = 0;     // max |R - 3/4 (e+ + e-)|
  double normalization = 0;     // max |int b - 1| over e+, e-, f+, f-
  double rate_at_zero = 0;      // |R(0)| + |R'(0)| + |R''(0) - 12 pi^2|
};

// Random (k, k', eta) uniform on [-1/2, 1/2]^3; identities on a uniform grid of the torus.
inline KernelReport kernel_identity_suite(std::size_t samples = 1000, std::size_t grid = 4096,
                                          std::uint64_t seed = 20240601) {
  KernelReport r;
  r.samples = samples;
  r.grid = grid;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t i = 0; i < samples; ++i) {
    const double k = u(rng), kp = u(rng), eta = u(rng);
    r.kernel_diff = std::max(r.kernel_diff, scattering_kernel(k, kp, eta).abs_diff());
  }
  double ip = 0, im = 0, fp = 0, fm = 0;
  for (std::size_t j = 0; j < grid; ++j) {
    const double k = -0.5 + static_cast<double>(j) / static_cast<double>(grid);
    const double R = noise_rate(k);
    const auto b = basis_functions(k);
    r.beta_vs_rate = std::max(r.beta_vs_rate, std::abs(beta_hat(k) - 4.0 * R));
    r.rate_vs_basis = std::max(r.rate_vs_basis, std::abs(R - 0.75 * (b.e_plus + b.e_minus)));
    ip += b.e_plus;
    im += b.e_minus;
    fp += b.f_plus;
    fm += b.f_minus;
  }
  const double h = 1.0 / static_cast<double>(grid);
  for (double v : {ip, im, fp, fm}) r.normalization = std::max(r.normalization, std::abs(v * h - 1.0));
  const auto [d1, d2] = noise_rate_derivs(0.0);
  r.rate_at_zero = std::abs(noise_rate(0.0)) + std::abs(d1) +
                   std::abs(d2 - 12.0 * std::numbers::pi * std::numbers::pi);
  return r;
}

}  // namespace nachain

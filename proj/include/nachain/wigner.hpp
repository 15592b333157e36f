#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nachain/fft.hpp"
#include "nachain/gibbs.hpp"

namespace nachain {

// One eta-row of the Fourier-Wigner functions.  Entry j sits at k = (j + eta/2)/N and pairs
// psi_hat(j/N) with psi_hat((j+eta)/N):
//   W+(eta,j) = (eps/2) E[conj psi_hat(j) psi_hat(j+eta)]
//   Y+(eta,j) = (eps/2) E[psi_hat(-j) psi_hat(j+eta)]
//   Y-(eta,j) = (eps/2) conj E[psi_hat(-j-eta) psi_hat(j)]
// W-(eta,j) = W+(eta, reflect(j)) is not stored.
struct WignerRow {
  int eta = 0;
  std::vector<cplx> w_plus, y_plus, y_minus;
};

inline std::size_t wrap_index(long long i, std::size_t n) {
  const long long m = static_cast<long long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

struct WignerGrid {
  std::size_t N = 0;
  std::vector<WignerRow> rows;

  double eps() const { return 1.0 / static_cast<double>(N); }

  // k -> -k on the row grid.
  static std::size_t reflect(std::size_t j, int eta, std::size_t n) {
    return wrap_index(-static_cast<long long>(j) - eta, n);
  }
  double k(int eta, std::size_t j) const {
    return reduce_torus((static_cast<double>(j) + 0.5 * eta) / static_cast<double>(N));
  }
  cplx w_minus(const WignerRow& r, std::size_t j) const { return r.w_plus[reflect(j, r.eta, N)]; }

  const WignerRow* find(int eta) const {
    for (const auto& r : rows)
      if (r.eta == eta) return &r;
    return nullptr;
  }
  WignerRow* find(int eta) {
    for (auto& r : rows)
      if (r.eta == eta) return &r;
    return nullptr;
  }
  const WignerRow& row(int eta) const {
    const WignerRow* r = find(eta);
    if (!r) throw std::out_of_range("WignerGrid: no row for eta=" + std::to_string(eta));
    return *r;
  }

  // Fourier coefficient eps sum_x <e_x> e^{-2 pi i eta x/N} of the energy profile.
  cplx energy_coefficient(int eta) const {
    const WignerRow& r = row(eta);
    cplx s = 0.0;
    for (const auto& v : r.w_plus) s += v;
    return s / static_cast<double>(N);
  }
  // Pairing with J = 1.
  double total_energy() const { return energy_coefficient(0).real(); }

  static WignerGrid zeros(std::size_t n, const std::vector<int>& etas) {
    WignerGrid g;
    g.N = n;
    for (int e : etas)
      g.rows.push_back({e, std::vector<cplx>(n), std::vector<cplx>(n), std::vector<cplx>(n)});
    return g;
  }
};

inline std::vector<int> eta_range(int H) {
  std::vector<int> v;
  for (int e = -H; e <= H; ++e) v.push_back(e);
  return v;
}

// Exact Wigner rows of a product Gaussian law with the given site means and variances.
inline WignerGrid wigner_from_site_moments(const SiteMoments& m, double alpha,
                                           const std::vector<int>& etas) {
  const std::size_t n = m.mean_p.size();
  const double sa = std::sqrt(alpha), half_eps = 0.5 / static_cast<double>(n);
  std::vector<cplx> mean(n), v(n), u(n), mhat(n), vhat(n), uhat(n);
  for (std::size_t x = 0; x < n; ++x) {
    mean[x] = cplx(sa * m.mean_k[x], m.mean_p[x]);
    v[x] = alpha * m.var_k[x] + m.var_p[x];
    u[x] = alpha * m.var_k[x] - m.var_p[x];
  }
  ComplexFFT fft(n);
  fft.forward(mean.data(), mhat.data());
  fft.forward(v.data(), vhat.data());
  fft.forward(u.data(), uhat.data());
  WignerGrid g = WignerGrid::zeros(n, etas);
  for (auto& r : g.rows) {
    const long long e = r.eta;
    for (std::size_t j = 0; j < n; ++j) {
      const long long jj = static_cast<long long>(j);
      r.w_plus[j] = half_eps * (std::conj(mhat[j]) * mhat[wrap_index(jj + e, n)] + vhat[wrap_index(e, n)]);
      r.y_plus[j] = half_eps * (mhat[wrap_index(-jj, n)] * mhat[wrap_index(jj + e, n)] +
                                uhat[wrap_index(e, n)]);
      r.y_minus[j] = half_eps * std::conj(mhat[wrap_index(-jj - e, n)] * mhat[j] +
                                          uhat[wrap_index(-e, n)]);
    }
  }
  return g;
}

// Dense raw second moments E[z z^T] of z = (k_0..k_{N-1}, p_0..p_{N-1}).
struct Covariance {
  std::size_t N = 0;
  std::vector<double> S;  // row-major 2N x 2N
  double& operator()(std::size_t i, std::size_t j) { return S[i * 2 * N + j]; }
  double operator()(std::size_t i, std::size_t j) const { return S[i * 2 * N + j]; }
  static Covariance zeros(std::size_t n) { return {n, std::vector<double>(4 * n * n, 0.0)}; }
};

namespace detail {
inline std::vector<cplx> dft_phases(std::size_t n) {
  std::vector<cplx> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}
}  // namespace detail

inline WignerGrid wigner_from_covariance(const Covariance& cov, double alpha,
                                         const std::vector<int>& etas) {
  const std::size_t n = cov.N;
  const double sa = std::sqrt(alpha);
  // C = E[conj psi_x psi_y], D = E[psi_x psi_y]
  std::vector<cplx> C(n * n), D(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      const double kk = cov(x, y), pp = cov(n + x, n + y), kp = cov(x, n + y), pk = cov(n + x, y);
      C[x * n + y] = cplx(alpha * kk + pp, sa * (kp - pk));
      D[x * n + y] = cplx(alpha * kk - pp, sa * (kp + pk));
    }
  const auto w = detail::dft_phases(n);
  // Chat(a,b) = sum C_xy e^{+2 pi i a x} e^{-2 pi i b y}; Dhat(a,b) = sum D_xy e^{-2 pi i (a x + b y)}
  std::vector<cplx> Ct(n * n), Dt(n * n), Chat(n * n), Dhat(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t b = 0; b < n; ++b) {
      cplx sc = 0.0, sd = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        sc += C[x * n + y] * w[(b * y) % n];
        sd += D[x * n + y] * w[(b * y) % n];
      }
      Ct[x * n + b] = sc;
      Dt[x * n + b] = sd;
    }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      cplx sc = 0.0, sd = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        sc += std::conj(w[(a * x) % n]) * Ct[x * n + b];
        sd += w[(a * x) % n] * Dt[x * n + b];
      }
      Chat[a * n + b] = sc;
      Dhat[a * n + b] = sd;
    }
  const double half_eps = 0.5 / static_cast<double>(n);
  WignerGrid g = WignerGrid::zeros(n, etas);
  for (auto& r : g.rows)
    for (std::size_t j = 0; j < n; ++j) {
      const long long jj = static_cast<long long>(j);
      r.w_plus[j] = half_eps * Chat[j * n + wrap_index(jj + r.eta, n)];
      r.y_plus[j] = half_eps * Dhat[wrap_index(-jj, n) * n + wrap_index(jj + r.eta, n)];
      r.y_minus[j] = half_eps * std::conj(Dhat[wrap_index(-jj - r.eta, n) * n + j]);
    }
  return g;
}

// Inverse of wigner_from_covariance; needs a row for every residue of eta mod N and alpha > 0.
inline Covariance covariance_from_wigner(const WignerGrid& g, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("covariance_from_wigner: alpha must be positive");
  const std::size_t n = g.N;
  std::vector<const WignerRow*> by_res(n, nullptr);
  for (const auto& r : g.rows) by_res[wrap_index(r.eta, n)] = &r;
  for (auto* p : by_res)
    if (!p) throw std::invalid_argument("covariance_from_wigner: missing eta residue");
  const double two_over_eps = 2.0 * static_cast<double>(n);
  std::vector<cplx> Chat(n * n), Dhat(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const WignerRow* rc = by_res[wrap_index(static_cast<long long>(b) - static_cast<long long>(a), n)];
      // W(eta, j) with j = a; the row may store eta outside [0, N) but pairs are the same.
      const long long jw = static_cast<long long>(a);
      Chat[a * n + b] = two_over_eps * rc->w_plus[wrap_index(jw, n)];
      const WignerRow* rd = by_res[wrap_index(static_cast<long long>(a + b), n)];
      Dhat[a * n + b] = two_over_eps * rd->y_plus[wrap_index(-static_cast<long long>(a), n)];
    }
  const auto w = detail::dft_phases(n);
  const double inv = 1.0 / static_cast<double>(n * n);
  // C_xy = N^-2 sum Chat(a,b) e^{-2 pi i a x} e^{+2 pi i b y}; D_xy = N^-2 sum Dhat e^{+2 pi i (a x + b y)}
  std::vector<cplx> Ct(n * n), Dt(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t y = 0; y < n; ++y) {
      cplx sc = 0.0, sd = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        sc += Chat[a * n + b] * std::conj(w[(b * y) % n]);
        sd += Dhat[a * n + b] * std::conj(w[(b * y) % n]);
      }
      Ct[a * n + y] = sc;
      Dt[a * n + y] = sd;
    }
  Covariance cov = Covariance::zeros(n);
  const double sa = std::sqrt(alpha);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      cplx c = 0.0, d = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        c += w[(a * x) % n] * Ct[a * n + y];
        d += std::conj(w[(a * x) % n]) * Dt[a * n + y];
      }
      c *= inv;
      d *= inv;
      cov(x, y) = 0.5 * (c + d).real() / alpha;
      cov(n + x, n + y) = 0.5 * (c - d).real();
      cov(x, n + y) = 0.5 * (c + d).imag() / sa;
      cov(n + x, y) = 0.5 * (d - c).imag() / sa;
    }
  return cov;
}

}  // namespace nachain

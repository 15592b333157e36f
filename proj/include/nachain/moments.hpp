#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nachain/ensemble.hpp"
#include "nachain/kernels.hpp"
#include "nachain/linalg2.hpp"
#include "nachain/wigner.hpp"

namespace nachain {

// E[psi_hat(m/N)], m = 0..N-1.
struct MeanField {
  std::vector<cplx> psi_bar;
  std::size_t N() const { return psi_bar.size(); }
};

inline MeanField mean_field_from(const std::vector<double>& kbar, const std::vector<double>& pbar,
                                 double alpha) {
  const std::size_t n = pbar.size();
  if (kbar.size() != n) throw std::invalid_argument("mean_field_from: length mismatch");
  std::vector<cplx> psi(n);
  const double sa = std::sqrt(alpha);
  for (std::size_t x = 0; x < n; ++x) psi[x] = cplx(sa * kbar[x], pbar[x]);
  MeanField m{std::vector<cplx>(n)};
  ComplexFFT(n).forward(psi.data(), m.psi_bar.data());
  return m;
}

// Mean momentum profile p_x from the mean field (valid for any alpha).
inline std::vector<double> mean_momentum(const MeanField& m) {
  const std::size_t n = m.N();
  std::vector<cplx> psi(n);
  ComplexFFT(n).backward(m.psi_bar.data(), psi.data());
  std::vector<double> p(n);
  for (std::size_t x = 0; x < n; ++x) p[x] = psi[x].imag() / static_cast<double>(n);
  return p;
}

inline std::vector<double> mean_curvature(const MeanField& m, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("mean_curvature: alpha must be positive");
  const std::size_t n = m.N();
  std::vector<cplx> psi(n);
  ComplexFFT(n).backward(m.psi_bar.data(), psi.data());
  std::vector<double> k(n);
  for (std::size_t x = 0; x < n; ++x)
    k[x] = psi[x].real() / (static_cast<double>(n) * std::sqrt(alpha));
  return k;
}

// Exact solution of d psi/dt = -i Omega psi - gamma R (psi - conj psi(-k)) per mode pair.
inline MeanField evolve_mean(const MeanField& m, double t, const ModelParams& par) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve_mean: t must be nonnegative");
  const std::size_t n = m.N();
  MeanField out{std::vector<cplx>(n)};
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t b = (n - a) % n;
    if (b < a) continue;
    const double k = static_cast<double>(a) / static_cast<double>(n);
    const double om = wave_frequency(k, par), gr = par.gamma * noise_rate(k);
    // (psi(a), phi(a)) with phi(a) = conj psi(-a)
    const Mat2 M{cplx(-gr, -om), cplx(gr, 0.0), cplx(gr, 0.0), cplx(-gr, om)};
    const Mat2 E = expm2(M, t);
    const cplx psi = m.psi_bar[a], phi = std::conj(m.psi_bar[b]);
    const cplx psi_new = E[0] * psi + E[1] * phi;
    const cplx phi_new = E[2] * psi + E[3] * phi;
    out.psi_bar[a] = psi_new;
    if (b != a) out.psi_bar[b] = std::conj(phi_new);
  }
  return out;
}

// Same dynamics written for mean curvature and momentum:
//   dk = -Lap p,  dp = alpha Lap k - (gamma/2) beta * p.
inline void evolve_mean_fields(std::vector<double>& kbar, std::vector<double>& pbar, double t,
                               const ModelParams& par) {
  const std::size_t n = pbar.size();
  RealFFT fft(n);
  std::vector<cplx> kh(fft.modes()), ph(fft.modes());
  fft.forward(kbar.data(), kh.data());
  fft.forward(pbar.data(), ph.data());
  for (std::size_t a = 0; a < kh.size(); ++a) {
    const double k = static_cast<double>(a) / static_cast<double>(n);
    const double s = sinpi(k), lap = 4.0 * s * s;
    const Mat2 M{cplx(0.0), cplx(lap), cplx(-par.alpha * lap), cplx(-0.5 * par.gamma * beta_hat(k))};
    const Mat2 E = expm2(M, t);
    const cplx k0 = kh[a], p0 = ph[a];
    kh[a] = E[0] * k0 + E[1] * p0;
    ph[a] = E[2] * k0 + E[3] * p0;
  }
  fft.inverse(kh.data(), kbar.data());
  fft.inverse(ph.data(), pbar.data());
  for (std::size_t x = 0; x < n; ++x) {
    kbar[x] /= static_cast<double>(n);
    pbar[x] /= static_cast<double>(n);
  }
}

struct MomentOptions {
  double dt = 0.0;  // 0 selects 0.1/gamma
  unsigned threads = 0;
};

inline constexpr double kMomentStabilityLimit = 0.75;

namespace detail {

// Precomputed symbols of one eta-row.
struct RowSymbols {
  int eta;
  std::size_t n;
  double S;
  std::vector<double> Rp, Rm;
  std::vector<Basis<double>> basis;
  std::vector<std::size_t> refl;
  std::vector<cplx> ph_w, ph_yp, ph_ym;          // exp(-i Phi h)
  std::vector<cplx> ph_w_h, ph_yp_h, ph_ym_h;    // exp(-i Phi h/2)
  double max_rate = 0.0;

  RowSymbols(int e, std::size_t nn, const ModelParams& par, double h) : eta(e), n(nn) {
    const double dn = static_cast<double>(n);
    const double se = sinpi(0.5 * e / dn);
    S = se * se;
    Rp.resize(n);
    Rm.resize(n);
    basis.resize(n);
    refl.resize(n);
    ph_w.resize(n);
    ph_yp.resize(n);
    ph_ym.resize(n);
    ph_w_h.resize(n);
    ph_yp_h.resize(n);
    ph_ym_h.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double kp = (static_cast<double>(j) + e) / dn, km = static_cast<double>(j) / dn;
      const double k = (static_cast<double>(j) + 0.5 * e) / dn;
      Rp[j] = noise_rate(kp);
      Rm[j] = noise_rate(km);
      max_rate = std::max(max_rate, Rp[j] + Rm[j]);
      basis[j] = basis_functions(k);
      refl[j] = WignerGrid::reflect(j, e, n);
      const double wd = wave_frequency(kp, par) - wave_frequency(km, par);
      const double ws = wave_frequency(kp, par) + wave_frequency(km, par);
      ph_w[j] = std::polar(1.0, -wd * h);
      ph_yp[j] = std::polar(1.0, -ws * h);
      ph_ym[j] = std::polar(1.0, ws * h);
      ph_w_h[j] = std::polar(1.0, -0.5 * wd * h);
      ph_yp_h[j] = std::polar(1.0, -0.5 * ws * h);
      ph_ym_h[j] = std::polar(1.0, 0.5 * ws * h);
    }
  }
};

struct RowState {
  std::vector<cplx> w, yp, ym;
};

// Noise part of the row dynamics.
inline void noise_rhs(const RowSymbols& sy, double gamma, const RowState& u, RowState& out) {
  const std::size_t n = sy.n;
  BasisProjections<cplx> P;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx v = u.w[j] - 0.5 * (u.yp[j] + u.ym[j]);
    const auto& b = sy.basis[j];
    P.e_plus += v * b.e_plus;
    P.e_minus += v * b.e_minus;
    P.f_plus += v * b.f_plus;
    P.f_minus += v * b.f_minus;
    P.one += v;
  }
  const double inv = 1.0 / static_cast<double>(n);
  P.e_plus *= inv;
  P.e_minus *= inv;
  P.f_plus *= inv;
  P.f_minus *= inv;
  P.one *= inv;
  out.w.resize(n);
  out.yp.resize(n);
  out.ym.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx kv = 2.0 * apply_decomposed(sy.basis[j], P, sy.S);
    const double rp = sy.Rp[j], rm = sy.Rm[j], tot = rp + rm;
    const cplx wm = u.w[sy.refl[j]];
    out.w[j] = gamma * (-tot * u.w[j] + kv + rm * u.yp[j] + rp * u.ym[j]);
    out.yp[j] = gamma * (-tot * u.yp[j] - kv + rm * u.w[j] + rp * wm);
    out.ym[j] = gamma * (-tot * u.ym[j] - kv + rp * u.w[j] + rm * wm);
  }
}

// One Lawson (phase-only integrating factor) explicit midpoint step.
inline void lawson_midpoint(const RowSymbols& sy, double gamma, double h, RowState& u,
                            RowState& k1, RowState& mid, RowState& k2) {
  const std::size_t n = sy.n;
  noise_rhs(sy, gamma, u, k1);
  mid.w.resize(n);
  mid.yp.resize(n);
  mid.ym.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    mid.w[j] = sy.ph_w_h[j] * (u.w[j] + 0.5 * h * k1.w[j]);
    mid.yp[j] = sy.ph_yp_h[j] * (u.yp[j] + 0.5 * h * k1.yp[j]);
    mid.ym[j] = sy.ph_ym_h[j] * (u.ym[j] + 0.5 * h * k1.ym[j]);
  }
  noise_rhs(sy, gamma, mid, k2);
  for (std::size_t j = 0; j < n; ++j) {
    u.w[j] = sy.ph_w[j] * u.w[j] + h * sy.ph_w_h[j] * k2.w[j];
    u.yp[j] = sy.ph_yp[j] * u.yp[j] + h * sy.ph_yp_h[j] * k2.yp[j];
    u.ym[j] = sy.ph_ym[j] * u.ym[j] + h * sy.ph_ym_h[j] * k2.ym[j];
  }
}

}  // namespace detail

// Evolves every stored eta-row over micro time t.  Rows are independent.
inline WignerGrid evolve_moments(const WignerGrid& f, double t, const ModelParams& par,
                                 MomentOptions opt = {}) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve_moments: t must be nonnegative");
  par.validate();
  const double hmax = opt.dt > 0.0 ? opt.dt : 0.1 / par.gamma;
  const std::size_t steps = t > 0.0 ? static_cast<std::size_t>(std::ceil(t / hmax - 1e-12)) : 0;
  const double h = steps ? t / static_cast<double>(steps) : 0.0;
  WignerGrid out = f;
  if (steps == 0) return out;
  parallel_for(out.rows.size(), resolve_threads(opt.threads), [&](std::size_t i) {
    WignerRow& row = out.rows[i];
    detail::RowSymbols sy(row.eta, f.N, par, h);
    if (par.gamma * h * sy.max_rate > kMomentStabilityLimit)
      throw std::invalid_argument("evolve_moments: step rejected, gamma*dt*max(2R) = " +
                                  std::to_string(par.gamma * h * sy.max_rate) + " exceeds " +
                                  std::to_string(kMomentStabilityLimit));
    detail::RowState u{row.w_plus, row.y_plus, row.y_minus}, k1, mid, k2;
    for (std::size_t s = 0; s < steps; ++s) detail::lawson_midpoint(sy, par.gamma, h, u, k1, mid, k2);
    row.w_plus = std::move(u.w);
    row.y_plus = std::move(u.yp);
    row.y_minus = std::move(u.ym);
  });
  return out;
}

}  // namespace nachain

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nachain/fft.hpp"
#include "nachain/gibbs.hpp"
#include "nachain/kernels.hpp"
#include "nachain/linalg2.hpp"
#include "nachain/wigner.hpp"

namespace nachain {

// Fourier coefficients on the unit torus for modes -H..H, stored at index eta + H.
struct MacroFields {
  int H = 0;
  std::vector<cplx> kappa_hat, p_hat, eth_hat;
  double time = 0.0;

  static MacroFields zeros(int h) {
    if (h < 0) throw std::invalid_argument("MacroFields: H must be nonnegative");
    const std::size_t m = 2 * static_cast<std::size_t>(h) + 1;
    return {h, std::vector<cplx>(m), std::vector<cplx>(m), std::vector<cplx>(m), 0.0};
  }
  std::size_t idx(int eta) const {
    if (std::abs(eta) > H) throw std::out_of_range("MacroFields: mode out of range");
    return static_cast<std::size_t>(eta + H);
  }
  cplx& kappa(int e) { return kappa_hat[idx(e)]; }
  cplx& p(int e) { return p_hat[idx(e)]; }
  cplx& eth(int e) { return eth_hat[idx(e)]; }
  cplx kappa(int e) const { return kappa_hat[idx(e)]; }
  cplx p(int e) const { return p_hat[idx(e)]; }
  cplx eth(int e) const { return eth_hat[idx(e)]; }

  // Local Gibbs initial data; thermal energy is 1/beta (alpha > 0) or 1/(2 beta) (alpha = 0).
  static MacroFields from_profiles(const MacroProfiles& prof, int h, double alpha) {
    MacroFields f = zeros(h);
    const double th = alpha > 0.0 ? 1.0 : 0.5;
    for (int e = -h; e <= h; ++e) {
      f.kappa(e) = prof.kappa.coefficient(e);
      f.p(e) = prof.p.coefficient(e);
      f.eth(e) = th * prof.beta_inv.coefficient(e);
    }
    return f;
  }
};

inline double evaluate_series(const std::vector<cplx>& c, int H, double y) {
  double v = 0.0;
  for (int e = -H; e <= H; ++e)
    v += (c[static_cast<std::size_t>(e + H)] * std::polar(1.0, 2.0 * std::numbers::pi * e * y)).real();
  return v;
}

// Exact per-mode flow of  kappa_t = -p_yy,  p_t = alpha kappa_yy + 3 gamma p_yy.
inline MacroFields beam_solve(const MacroFields& f, double t, const ModelParams& par) {
  if (!(t >= 0.0)) throw std::invalid_argument("beam_solve: t must be nonnegative");
  MacroFields out = f;
  for (int e = -f.H; e <= f.H; ++e) {
    if (e == 0) continue;
    const double q2 = std::pow(2.0 * std::numbers::pi * e, 2);
    const Mat2 E = expm2({cplx(0.0), cplx(q2), cplx(-par.alpha * q2), cplx(-3.0 * par.gamma * q2)}, t);
    out.kappa(e) = E[0] * f.kappa(e) + E[1] * f.p(e);
    out.p(e) = E[2] * f.kappa(e) + E[3] * f.p(e);
  }
  out.time = f.time + t;
  return out;
}

// int_T (1/2)(p^2 + alpha kappa^2) dy by Parseval.
inline double mech_energy_total(const MacroFields& f, double alpha) {
  double s = 0.0;
  for (int e = -f.H; e <= f.H; ++e) s += std::norm(f.p(e)) + alpha * std::norm(f.kappa(e));
  return 0.5 * s;
}

inline double total_energy(const MacroFields& f, double alpha) {
  return f.eth(0).real() + mech_energy_total(f, alpha);
}

inline double diffusivity(const ModelParams& p) {
  const double s3 = std::sqrt(3.0);
  return (s3 - 1.0) * p.alpha / (2.0 * s3 * p.gamma) + 3.0 * p.gamma;
}

// Same formula with the true lattice wave frequency (twice the dispersion) in the kinetic integral.
inline double lattice_diffusivity(const ModelParams& p) {
  const double s3 = std::sqrt(3.0);
  return 4.0 * (s3 - 1.0) * p.alpha / (2.0 * s3 * p.gamma) + 3.0 * p.gamma;
}

struct QuadratureResult {
  double value = 0.0;     // assembled diffusivity
  double integral = 0.0;  // int (omega')^2 / R dk
  double error_estimate = 0.0;
  std::size_t points = 0;
};

struct QuadratureOptions {
  double tol = 1e-14;
  std::size_t min_points = 64;
  std::size_t max_points = 1u << 20;
  double k_zero = 1e-8;  // stand-in for the removable point k = 0
};

inline double diffusivity_integrand(double k, const ModelParams& p) {
  const double dw = 2.0 * std::sqrt(p.alpha) * std::numbers::pi * sinpi(2.0 * k);
  return dw * dw / noise_rate(k);
}

// Periodic trapezoid rule, doubled until two levels agree to tol.
inline QuadratureResult diffusivity_quadrature(const ModelParams& par, QuadratureOptions opt = {}) {
  par.validate();
  auto trap = [&](std::size_t n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double k = j == 0 ? opt.k_zero : static_cast<double>(j) / static_cast<double>(n);
      s += diffusivity_integrand(k, par);
    }
    return s / static_cast<double>(n);
  };
  std::size_t n = opt.min_points;
  double prev = trap(n);
  double err = 0.0;
  for (;;) {
    const double cur = trap(2 * n);
    err = std::abs(cur - prev);
    n *= 2;
    prev = cur;
    if (err <= opt.tol * std::max(1.0, std::abs(cur))) break;
    if (2 * n > opt.max_points)
      throw std::runtime_error("diffusivity_quadrature: no convergence, error estimate " +
                               std::to_string(err));
  }
  const double integral = prev;
  return {integral / (8.0 * std::numbers::pi * std::numbers::pi * par.gamma) + 3.0 * par.gamma,
          integral, err, n};
}

// Exact beam trajectory from fixed initial data.
struct BeamTrajectory {
  MacroFields initial;
  ModelParams params;
  MacroFields at(double t) const { return beam_solve(initial, t - initial.time, params); }
};

namespace detail {
// Products of band-limited fields on a 2x padded grid.
class PaddedProduct {
 public:
  explicit PaddedProduct(int H)
      : H_(H), M_(std::max<std::size_t>(8, 2 * (2 * static_cast<std::size_t>(H) + 1))), fft_(M_),
        buf_(M_), a_(M_), b_(M_) {}

  // Coefficients of (sum_e fa_e e^{2 pi i e y}) * (sum_e fb_e ...), truncated to -H..H.
  std::vector<cplx> multiply(const std::vector<cplx>& fa, const std::vector<cplx>& fb) {
    to_grid(fa, a_);
    to_grid(fb, b_);
    for (std::size_t l = 0; l < M_; ++l) buf_[l] = a_[l] * b_[l];
    fft_.forward(buf_.data(), buf_.data());
    std::vector<cplx> out(fa.size());
    for (int e = -H_; e <= H_; ++e)
      out[static_cast<std::size_t>(e + H_)] = buf_[wrap_index(e, M_)] / static_cast<double>(M_);
    return out;
  }

 private:
  void to_grid(const std::vector<cplx>& f, std::vector<cplx>& g) {
    std::fill(buf_.begin(), buf_.end(), cplx(0.0));
    for (int e = -H_; e <= H_; ++e) buf_[wrap_index(e, M_)] = f[static_cast<std::size_t>(e + H_)];
    fft_.backward(buf_.data(), g.data());
  }

  int H_;
  std::size_t M_;
  ComplexFFT fft_;
  std::vector<cplx> buf_, a_, b_;
};

inline std::vector<cplx> derivative(const std::vector<cplx>& f, int H) {
  std::vector<cplx> d(f.size());
  for (int e = -H; e <= H; ++e)
    d[static_cast<std::size_t>(e + H)] = cplx(0.0, 2.0 * std::numbers::pi * e) * f[static_cast<std::size_t>(e + H)];
  return d;
}

inline double beam_max_rate(const MacroFields& f, const ModelParams& par) {
  double r = 0.0;
  for (int e = -f.H; e <= f.H; ++e) {
    if (e == 0 || (f.p(e) == cplx(0.0) && f.kappa(e) == cplx(0.0))) continue;
    const double q2 = std::pow(2.0 * std::numbers::pi * e, 2);
    const double g = 3.0 * par.gamma;
    r = std::max(r, 0.5 * q2 * (g + std::sqrt(std::abs(g * g - 4.0 * par.alpha))) + q2 * std::sqrt(par.alpha));
  }
  return r;
}
}  // namespace detail

inline std::vector<cplx> mech_energy_hat(const MacroFields& f, double alpha) {
  detail::PaddedProduct pp(f.H);
  auto a = pp.multiply(f.p_hat, f.p_hat), b = pp.multiply(f.kappa_hat, f.kappa_hat);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + alpha * b[i]);
  return a;
}

struct ThermalOptions {
  std::size_t substeps = 0;  // 0 picks a count from the stiffness of the source
  double rate_step = 2e-3;   // target substep * fastest source rate
  std::size_t max_substeps = 4'000'000;
};

// d/dt e_th = c e_th_yy + 3 gamma (p_y)^2.  Exponential midpoint in the mode integrating factor,
// beam source evaluated pseudo-spectrally at substep midpoints.
inline MacroFields thermal_solve(const MacroFields& f, const BeamTrajectory& beam, double t,
                                 const ModelParams& par, double c, ThermalOptions opt = {}) {
  if (!(t >= 0.0)) throw std::invalid_argument("thermal_solve: t must be nonnegative");
  if (beam.initial.H != f.H) throw std::invalid_argument("thermal_solve: mode cutoff mismatch");
  if (f.time < beam.initial.time) throw std::invalid_argument("thermal_solve: beam trajectory starts after t0");
  MacroFields out = beam.at(f.time + t);
  out.eth_hat = f.eth_hat;
  if (t == 0.0) return out;
  const int H = f.H;
  std::size_t n = opt.substeps;
  if (n == 0) {
    int act = 0;
    for (int e = -H; e <= H; ++e)
      if (beam.initial.p(e) != cplx(0.0) || beam.initial.kappa(e) != cplx(0.0)) act = std::max(act, std::abs(e));
    const double rate = 2.0 * detail::beam_max_rate(beam.initial, par) +
                        c * std::pow(2.0 * std::numbers::pi * std::min(2 * act, H), 2);
    n = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(t * rate / opt.rate_step)));
    if (n > opt.max_substeps)
      throw std::invalid_argument("thermal_solve: source too stiff for " + std::to_string(opt.max_substeps) +
                                  " substeps");
  }
  const double h = t / static_cast<double>(n);
  std::vector<cplx> full(f.eth_hat.size()), half(f.eth_hat.size());
  for (int e = -H; e <= H; ++e) {
    const double q2 = std::pow(2.0 * std::numbers::pi * e, 2);
    full[static_cast<std::size_t>(e + H)] = std::exp(-c * q2 * h);
    half[static_cast<std::size_t>(e + H)] = std::exp(-0.5 * c * q2 * h);
  }
  detail::PaddedProduct pp(H);
  auto& u = out.eth_hat;
  for (std::size_t s = 0; s < n; ++s) {
    const MacroFields b = beam.at(f.time + (static_cast<double>(s) + 0.5) * h);
    const auto py = detail::derivative(b.p_hat, H);
    const auto src = pp.multiply(py, py);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = full[i] * u[i] + h * half[i] * 3.0 * par.gamma * src[i];
  }
  // the mean mode stays real for real data
  u[static_cast<std::size_t>(H)] = u[static_cast<std::size_t>(H)].real();
  return out;
}

inline MacroFields thermal_solve(const MacroFields& f, double t, const ModelParams& par,
                                 ThermalOptions opt = {}) {
  return thermal_solve(f, BeamTrajectory{f, par}, t, par, diffusivity(par), opt);
}

struct MacroGridRow {
  double y, kappa, p, e_mech, e_th;
};

inline std::vector<MacroGridRow> macro_grid(const MacroFields& f, double alpha, std::size_t points) {
  std::vector<MacroGridRow> rows(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double y = static_cast<double>(i) / static_cast<double>(points);
    const double k = evaluate_series(f.kappa_hat, f.H, y), p = evaluate_series(f.p_hat, f.H, y);
    rows[i] = {y, k, p, 0.5 * (p * p + alpha * k * k), evaluate_series(f.eth_hat, f.H, y)};
  }
  return rows;
}

}  // namespace nachain

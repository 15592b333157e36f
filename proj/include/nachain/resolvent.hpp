#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nachain/fft.hpp"
#include "nachain/kernels.hpp"
#include "nachain/macro.hpp"

namespace nachain {

using Mat4c = Eigen::Matrix<cplx, 4, 4>;
using Vec4c = Eigen::Matrix<cplx, 4, 1>;

struct ResolventPoint {
  double lambda = 20.0;
  double eta = 1.0;
  double eps = 0.1;
  double k = 0.0;

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent: lambda must be positive");
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("resolvent: eps must lie in (0, 1]");
  }
};

// The scalar symbols D1, D2, D+, D- and their ingredients at one point.
struct ResolventSymbols {
  cplx D1, D2;
  double Dp, Dm;
  double R_eps, dR, omega_bar, delta_omega;
};

inline ResolventSymbols resolvent_symbols(const ResolventPoint& pt, const ModelParams& par) {
  const double e = pt.eps, k = pt.k, sa = std::sqrt(par.alpha);
  const auto [r1, r2] = noise_rate_derivs(k);
  const double Re = noise_rate(k) + (e * pt.eta) * (e * pt.eta) / 8.0 * r2;
  const double dw = 2.0 * sa / e * sinpi(e * pt.eta) * sinpi(2.0 * k);
  const double sk = sinpi(k), ck = cospi(k), sh = sinpi(0.5 * e * pt.eta), ch = cospi(0.5 * e * pt.eta);
  const double wb = 2.0 * sa * (sk * sk * ch * ch + ck * ck * sh * sh);
  const double base = e * e * pt.lambda + 2.0 * par.gamma * Re;
  ResolventSymbols s;
  s.D1 = cplx(base, e * dw);
  s.D2 = cplx(base, 2.0 * wb);
  s.Dp = -par.gamma * Re + 0.5 * par.gamma * e * r1 * pt.eta;
  s.Dm = -par.gamma * Re - 0.5 * par.gamma * e * r1 * pt.eta;
  s.R_eps = Re;
  s.dR = r1;
  s.omega_bar = wb;
  s.delta_omega = dw;
  return s;
}

// Component order (W+, Y+, Y-, W-); blocks [[A, B], [B, C]] with B = D- I.
inline Mat4c assemble_D(const ResolventPoint& pt, const ModelParams& par) {
  pt.validate();
  const auto s = resolvent_symbols(pt, par);
  Mat4c D = Mat4c::Zero();
  D(0, 0) = s.D1;
  D(0, 1) = s.Dp;
  D(1, 0) = s.Dp;
  D(1, 1) = s.D2;
  D(2, 2) = std::conj(s.D2);
  D(2, 3) = s.Dp;
  D(3, 2) = s.Dp;
  D(3, 3) = std::conj(s.D1);
  D(0, 2) = s.Dm;
  D(1, 3) = s.Dm;
  D(2, 0) = s.Dm;
  D(3, 1) = s.Dm;
  return D;
}

inline double det_closed_form(const ResolventPoint& pt, const ModelParams& par) {
  const auto s = resolvent_symbols(pt, par);
  const double e = pt.eps, lam = pt.lambda, gR = par.gamma * s.R_eps, wb = s.omega_bar,
               dw = s.delta_omega, g = par.gamma * s.dR * pt.eta;
  const double e2 = e * e, e4 = e2 * e2;
  return e4 * e4 * std::pow(lam, 4) + 8.0 * e4 * e2 * std::pow(lam, 3) * gR +
         4.0 * e4 * lam * lam * (5.0 * gR * gR + wb * wb + std::pow(0.5 * e * dw, 2) - std::pow(0.5 * e * g, 2)) +
         4.0 * e2 * lam * gR * (4.0 * gR * gR + 4.0 * wb * wb + std::pow(e * dw, 2) - std::pow(e * g, 2)) +
         4.0 * e2 * (gR * gR * dw * dw - 2.0 * gR * dw * wb * g + wb * wb * dw * dw) + 16.0 * gR * gR * wb * wb;
}

inline cplx det_direct(const ResolventPoint& pt, const ModelParams& par) {
  return assemble_D(pt, par).determinant();
}

struct AdjugateParts {
  cplx d1, d2, d_minus, d_plus, d_o;
};

inline AdjugateParts adjugate_parts(const ResolventPoint& pt, const ModelParams& par) {
  const auto s = resolvent_symbols(pt, par);
  const cplx D1 = s.D1, D2 = s.D2;
  const double p2 = s.Dp * s.Dp, m2 = s.Dm * s.Dm;
  AdjugateParts a;
  a.d1 = std::norm(D2) * std::conj(D1) - (p2 + m2) * D2.real() - cplx(0.0, 1.0) * (p2 - m2) * D2.imag();
  a.d2 = std::norm(D1) * std::conj(D2) - (p2 + m2) * D1.real() - cplx(0.0, 1.0) * (p2 - m2) * D1.imag();
  a.d_minus = s.Dp * (p2 - m2) - s.Dp * std::conj(D1 * D2);
  a.d_plus = -s.Dm * (D1 * std::conj(D2) + p2 - m2);
  a.d_o = 2.0 * s.Dp * s.Dm * D2.real();
  return a;
}

// adj(D) = [[P, Q], [Q, M]] from the closed-form entries.
inline Mat4c adjugate_entries(const ResolventPoint& pt, const ModelParams& par) {
  const auto a = adjugate_parts(pt, par);
  Mat4c A;
  A << a.d1, a.d_minus, std::conj(a.d_plus), a.d_o,  //
      a.d_minus, a.d2, a.d_o, a.d_plus,              //
      std::conj(a.d_plus), a.d_o, std::conj(a.d2), std::conj(a.d_minus),  //
      a.d_o, a.d_plus, std::conj(a.d_minus), std::conj(a.d1);
  return A;
}

// Macroscopic symbols, the eps -> 0 limit of eps^-2 D(lambda, eta, eps h).
inline Mat4c assemble_D_macro(double lambda, double eta, double h, const ModelParams& par) {
  const double pi2 = std::numbers::pi * std::numbers::pi, t2 = 2.0 * std::sqrt(par.alpha);
  const double g6 = 6.0 * par.gamma, hq = h * h + 0.25 * eta * eta;
  const cplx D1(lambda + 2.0 * pi2 * g6 * hq, 2.0 * pi2 * t2 * h * eta);
  const cplx D2(lambda + 2.0 * pi2 * hq * g6, 2.0 * pi2 * hq * t2);
  const double Dp = -g6 * pi2 * std::pow(h - 0.5 * eta, 2), Dm = -g6 * pi2 * std::pow(h + 0.5 * eta, 2);
  Mat4c D = Mat4c::Zero();
  D(0, 0) = D1;
  D(0, 1) = Dp;
  D(1, 0) = Dp;
  D(1, 1) = D2;
  D(2, 2) = std::conj(D2);
  D(2, 3) = Dp;
  D(3, 2) = Dp;
  D(3, 3) = std::conj(D1);
  D(0, 2) = Dm;
  D(1, 3) = Dm;
  D(2, 0) = Dm;
  D(3, 1) = Dm;
  return D;
}

// Initial Fourier-Wigner data (W+, Y+, Y-, W-) at wavenumber k for scale eps.
using ResolventInitial = std::function<std::array<cplx, 4>(double k, double eps)>;

inline ResolventInitial thermal_flat(cplx c) {
  return [c](double, double) { return std::array<cplx, 4>{c, 0.0, 0.0, c}; };
}

struct ResolventOptions {
  std::size_t min_points = 4096;
  double points_per_inv_eps = 64.0;
  double max_condition = 1e12;
};

struct ResolventSolution {
  double lambda = 0, eta = 0, eps = 0;
  std::vector<double> k;
  std::vector<cplx> w_plus, y_plus, y_minus, w_minus;
  // <w_c, e_->, <w_c, e_+> per component, then <v, f+>, <v, f->
  std::array<cplx, 4> proj_minus{}, proj_plus{};
  cplx v_f_plus = 0.0, v_f_minus = 0.0;
  double condition = 0.0;
  double projection_mismatch = 0.0;  // re-projection vs solved unknowns
  double residual = 0.0;             // max over k of the 4x4 residual, relative

  cplx w_minus_eps() const { return proj_minus[0]; }  // int w+ e- dk
  cplx w_plus_eps() const { return proj_plus[0]; }    // int w+ e+ dk
  cplx delta_w() const { return proj_plus[0] - proj_minus[0]; }
  double y_projection_max() const {
    return std::max({std::abs(proj_minus[1]), std::abs(proj_minus[2]), std::abs(proj_plus[1]),
                     std::abs(proj_plus[2])});
  }
  cplx pair(const std::function<double(double)>& phi) const {
    cplx s = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) s += w_plus[j] * phi(k[j]);
    return s / static_cast<double>(k.size());
  }
};

// The finite-rank reduced Laplace system, solved for the eight e-projections of the four
// components and the two auxiliary f-projections of v = w+ - (y+ + y-)/2.
inline ResolventSolution solve_resolvent(double lambda, double eta, double eps,
                                         const ResolventInitial& init, const ModelParams& par,
                                         ResolventOptions opt = {}) {
  ResolventPoint pt{lambda, eta, eps, 0.0};
  pt.validate();
  par.validate();
  const std::size_t nk = std::max<std::size_t>(
      opt.min_points, static_cast<std::size_t>(std::ceil(opt.points_per_inv_eps / eps)));
  const double wq = 1.0 / static_cast<double>(nk), g = par.gamma;
  const double C = g * std::pow(std::numbers::pi * eta, 2) / 2.0 * eps * eps;
  const std::array<double, 4> ev{1.0, -1.0, -1.0, 1.0}, cv{1.0, -0.5, -0.5, 0.0};

  ResolventSolution sol;
  sol.lambda = lambda;
  sol.eta = eta;
  sol.eps = eps;
  sol.k.resize(nk);
  std::vector<Vec4c> De(nk), z(nk);
  std::vector<Basis<double>> B(nk);
  std::vector<std::array<cplx, 4>> w0(nk);
  // coefficients sigma_a(k) of s(k) = sum_a sigma_a X_a
  auto sigma = [&](const Basis<double>& b, std::size_t a) -> double {
    if (a < 4) return 0.75 * g * b.e_plus * ev[a] - C * b.f_plus * cv[a];
    if (a < 8) return 0.75 * g * b.e_minus * ev[a - 4] - 3.0 * C * b.f_minus * cv[a - 4];
    if (a == 8) return -C * (16.0 * b.f_plus + b.e_minus);
    return -3.0 * C * b.e_plus;
  };
  auto test_fn = [&](const Basis<double>& b, std::size_t a) -> double {
    if (a < 4) return b.e_minus;
    if (a < 8) return b.e_plus;
    return a == 8 ? b.f_plus : b.f_minus;
  };
  auto comp = [&](const Vec4c& v, std::size_t a) -> cplx {
    if (a < 8) return v(static_cast<Eigen::Index>(a % 4));
    return v(0) * cv[0] + v(1) * cv[1] + v(2) * cv[2] + v(3) * cv[3];
  };

  Eigen::Matrix<cplx, 10, 10> G = Eigen::Matrix<cplx, 10, 10>::Zero();
  Eigen::Matrix<cplx, 10, 1> r = Eigen::Matrix<cplx, 10, 1>::Zero();
  const Vec4c e4(ev[0], ev[1], ev[2], ev[3]);
  for (std::size_t j = 0; j < nk; ++j) {
    const double k = -0.5 + static_cast<double>(j) * wq;
    sol.k[j] = k;
    pt.k = k;
    const Mat4c Dinv = assemble_D(pt, par).inverse();
    B[j] = basis_functions(k);
    w0[j] = init(k, eps);
    const Vec4c W(w0[j][0], w0[j][1], w0[j][2], w0[j][3]);
    De[j] = Dinv * e4;
    z[j] = eps * eps * (Dinv * W);
    for (std::size_t a = 0; a < 10; ++a) {
      const double tf = test_fn(B[j], a) * wq;
      const cplx dea = comp(De[j], a) * tf;
      r(static_cast<Eigen::Index>(a)) += comp(z[j], a) * tf;
      for (std::size_t b = 0; b < 10; ++b) G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += dea * sigma(B[j], b);
    }
  }
  const Eigen::Matrix<cplx, 10, 10> Msys = Eigen::Matrix<cplx, 10, 10>::Identity() - G;
  Eigen::JacobiSVD<Eigen::Matrix<cplx, 10, 10>> svd(Msys);
  const auto sv = svd.singularValues();
  sol.condition = sv(0) / sv(sv.size() - 1);
  if (!(sol.condition < opt.max_condition))
    throw std::runtime_error("solve_resolvent: reduced system is singular (condition " +
                             std::to_string(sol.condition) + "); lambda is below the valid range");
  const Eigen::Matrix<cplx, 10, 1> X = Msys.partialPivLu().solve(r);

  sol.w_plus.resize(nk);
  sol.y_plus.resize(nk);
  sol.y_minus.resize(nk);
  sol.w_minus.resize(nk);
  std::vector<Vec4c> w(nk);
  std::array<cplx, 10> reproj{};
  for (std::size_t j = 0; j < nk; ++j) {
    cplx s = 0.0;
    for (std::size_t a = 0; a < 10; ++a) s += sigma(B[j], a) * X(static_cast<Eigen::Index>(a));
    w[j] = De[j] * s + z[j];
    sol.w_plus[j] = w[j](0);
    sol.y_plus[j] = w[j](1);
    sol.y_minus[j] = w[j](2);
    sol.w_minus[j] = w[j](3);
    for (std::size_t a = 0; a < 10; ++a) reproj[a] += comp(w[j], a) * test_fn(B[j], a) * wq;
  }
  double mism = 0.0, scale = 0.0;
  for (std::size_t a = 0; a < 10; ++a) {
    mism = std::max(mism, std::abs(reproj[a] - X(static_cast<Eigen::Index>(a))));
    scale = std::max(scale, std::abs(X(static_cast<Eigen::Index>(a))));
  }
  sol.projection_mismatch = scale > 0.0 ? mism / scale : mism;
  for (std::size_t c = 0; c < 4; ++c) {
    sol.proj_minus[c] = X(static_cast<Eigen::Index>(c));
    sol.proj_plus[c] = X(static_cast<Eigen::Index>(c + 4));
  }
  sol.v_f_plus = X(8);
  sol.v_f_minus = X(9);

  // residual of D w = e s(k) + eps^2 W with s rebuilt from the re-projected w
  double res = 0.0;
  for (std::size_t j = 0; j < nk; ++j) {
    pt.k = sol.k[j];
    cplx s = 0.0;
    for (std::size_t a = 0; a < 10; ++a) s += sigma(B[j], a) * reproj[a];
    const Vec4c W(w0[j][0], w0[j][1], w0[j][2], w0[j][3]);
    const Vec4c rhs = e4 * s + eps * eps * W;
    const Vec4c lhs = assemble_D(pt, par) * w[j];
    const double den = std::max(rhs.norm(), 1e-300);
    res = std::max(res, (lhs - rhs).norm() / den);
  }
  sol.residual = res;
  return sol;
}

// Band-limited complex profile phi = sqrt(alpha) kappa + i p given by its torus modes -H..H.
struct PhiModes {
  int H = 0;
  std::vector<cplx> c;  // index m + H
  cplx at(long m) const {
    return (std::abs(m) > H || c.empty()) ? cplx(0.0) : c[static_cast<std::size_t>(m + H)];
  }
  static PhiModes from_fields(const MacroFields& f, double alpha) {
    PhiModes p{f.H, std::vector<cplx>(f.p_hat.size())};
    for (std::size_t i = 0; i < p.c.size(); ++i) p.c[i] = std::sqrt(alpha) * f.kappa_hat[i] + cplx(0.0, 1.0) * f.p_hat[i];
    return p;
  }
  bool zero() const {
    for (auto v : c)
      if (v != cplx(0.0)) return false;
    return true;
  }
};

// Macroscopic Wigner data of phi at eta on its discrete support h = m + eta/2.
struct PhiWignerPoint {
  double h;
  std::array<cplx, 4> w;  // (W+, Y+, Y-, W-)
};

inline std::vector<PhiWignerPoint> phi_wigner(const PhiModes& phi, int eta) {
  std::vector<PhiWignerPoint> pts;
  for (long m = -phi.H - std::abs(eta); m <= phi.H + std::abs(eta); ++m) {
    const std::array<cplx, 4> w{0.5 * std::conj(phi.at(m)) * phi.at(m + eta),
                                0.5 * phi.at(-m) * phi.at(m + eta),
                                0.5 * std::conj(phi.at(-m - eta) * phi.at(m)),
                                0.5 * std::conj(phi.at(-m - eta)) * phi.at(-m)};
    if (std::abs(w[0]) + std::abs(w[1]) + std::abs(w[2]) + std::abs(w[3]) < 1e-300) continue;
    pts.push_back({static_cast<double>(m) + 0.5 * eta, w});
  }
  return pts;
}

struct MacroLimit {
  cplx w_minus = 0.0;
  std::array<cplx, 4> w_bar{};        // int w_phi dh per component
  std::array<cplx, 4> h2_moment{};    // int h^2 w_phi dh
};

inline MacroLimit macro_limit_w(double lambda, int eta, cplx eth_hat, const PhiModes& phi,
                                const ModelParams& par) {
  if (!(lambda > 0.0)) throw std::invalid_argument("macro_limit_w: lambda must be positive");
  MacroLimit out;
  for (const auto& pt : phi_wigner(phi, eta)) {
    const Vec4c W(pt.w[0], pt.w[1], pt.w[2], pt.w[3]);
    const Vec4c x = assemble_D_macro(lambda, eta, pt.h, par).partialPivLu().solve(W);
    for (int c = 0; c < 4; ++c) {
      out.w_bar[c] += x(c);
      out.h2_moment[c] += pt.h * pt.h * x(c);
    }
  }
  const double pi = std::numbers::pi;
  auto dot_e = [](const std::array<cplx, 4>& v) { return v[0] - v[1] - v[2] + v[3]; };
  const cplx num = -3.0 * par.gamma * std::pow(pi * eta, 2) * dot_e(out.w_bar) +
                   6.0 * par.gamma * pi * pi * dot_e(out.h2_moment) + eth_hat;
  out.w_minus = num / (lambda + diffusivity(par) * std::pow(2.0 * pi * eta, 2));
  return out;
}

struct ConvergenceRow {
  double eps = 0;
  cplx w_minus_eps = 0.0;
  double abs_err = 0, rel_err = 0, ratio_to_prev = 0;
  double delta_w_over_eps2 = 0, y_over_eps2 = 0;
  double pairing_gap = 0;  // |int w+ phi - w- int phi - w_bar phi(0)|
  double residual = 0, projection_mismatch = 0;
};

struct ConvergenceTable {
  double lambda = 0;
  int eta = 0;
  cplx limit = 0.0;
  std::vector<ConvergenceRow> rows;
  bool monotone_full = false;
  bool monotone_tail = false;  // last three rows
  double final_rel_err = 0;
};

struct ConvergenceData {
  ResolventInitial init = thermal_flat(1.0);
  cplx eth_hat = 1.0;
  PhiModes phi{};
  // test function for the pairing check and its integral over T
  std::function<double(double)> test = [](double k) { return 2.0 * cospi(k) * cospi(k); };
  double test_integral = 1.0;
};

inline ConvergenceTable convergence_study(double lambda, int eta, const std::vector<double>& ladder,
                                          const ConvergenceData& data, const ModelParams& par,
                                          ResolventOptions opt = {}) {
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] < ladder[i - 1])) throw std::invalid_argument("convergence_study: eps ladder must decrease");
  ConvergenceTable t;
  t.lambda = lambda;
  t.eta = eta;
  const MacroLimit lim = macro_limit_w(lambda, eta, data.eth_hat, data.phi, par);
  t.limit = lim.w_minus;
  for (double eps : ladder) {
    const auto sol = solve_resolvent(lambda, eta, eps, data.init, par, opt);
    ConvergenceRow row;
    row.eps = eps;
    row.w_minus_eps = sol.w_minus_eps();
    row.abs_err = std::abs(row.w_minus_eps - t.limit);
    row.rel_err = row.abs_err / std::abs(t.limit);
    row.ratio_to_prev = t.rows.empty() ? 0.0 : row.abs_err / t.rows.back().abs_err;
    row.delta_w_over_eps2 = std::abs(sol.delta_w()) / (eps * eps);
    row.y_over_eps2 = sol.y_projection_max() / (eps * eps);
    row.pairing_gap = std::abs(sol.pair(data.test) - sol.w_minus_eps() * data.test_integral -
                               lim.w_bar[0] * data.test(0.0));
    row.residual = sol.residual;
    row.projection_mismatch = sol.projection_mismatch;
    t.rows.push_back(row);
  }
  auto monotone = [&](std::size_t from) {
    for (std::size_t i = from + 1; i < t.rows.size(); ++i)
      if (!(t.rows[i].abs_err < t.rows[i - 1].abs_err)) return false;
    return true;
  };
  t.monotone_full = monotone(0);
  t.monotone_tail = monotone(t.rows.size() > 3 ? t.rows.size() - 3 : 0);
  t.final_rel_err = t.rows.empty() ? 0.0 : t.rows.back().rel_err;
  return t;
}

}  // namespace nachain

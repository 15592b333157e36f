#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "nachain/chain.hpp"

namespace nachain {

struct GibbsParams {
  double beta = 1.0;
  double pbar = 0.0;
  double tau = 0.0;

  void validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  }
};

// Truncated Fourier series  f(y) = c0 + sum_j a_j cos(2 pi m_j y) + b_j sin(2 pi m_j y).
struct FourierProfile {
  struct Mode {
    int m;
    double cos_amp;
    double sin_amp;
  };
  double mean = 0.0;
  std::vector<Mode> modes;

  static FourierProfile constant(double c) { return {c, {}}; }

  double operator()(double y) const {
    double v = mean;
    for (const auto& md : modes) {
      const double a = 2.0 * std::numbers::pi * md.m * y;
      v += md.cos_amp * std::cos(a) + md.sin_amp * std::sin(a);
    }
    return v;
  }
  double derivative(double y, int order = 1) const {
    double v = 0.0;
    for (const auto& md : modes) {
      const double q = 2.0 * std::numbers::pi * md.m;
      const double a = q * y;
      // d/dy of (c cos + s sin) rotates (c, s) -> q (s, -c)
      double c = md.cos_amp, s = md.sin_amp;
      for (int i = 0; i < order; ++i) {
        const double nc = q * s, ns = -q * c;
        c = nc;
        s = ns;
      }
      v += c * std::cos(a) + s * std::sin(a);
    }
    return v;
  }
  int max_mode() const {
    int h = 0;
    for (const auto& md : modes) h = std::max(h, std::abs(md.m));
    return h;
  }
  // Coefficient of e^{2 pi i eta y}.
  cplx coefficient(int eta) const {
    cplx c = eta == 0 ? cplx(mean) : cplx(0.0);
    for (const auto& md : modes) {
      if (md.m == 0) {
        c += eta == 0 ? cplx(md.cos_amp) : cplx(0.0);
      } else if (md.m == eta) {
        c += cplx(0.5 * md.cos_amp, -0.5 * md.sin_amp);
      } else if (md.m == -eta) {
        c += cplx(0.5 * md.cos_amp, 0.5 * md.sin_amp);
      }
    }
    return c;
  }
};

// kappa and tau are linked by kappa = tau/alpha; the profile set carries kappa.
struct MacroProfiles {
  FourierProfile kappa = FourierProfile::constant(0.0);
  FourierProfile p = FourierProfile::constant(0.0);
  FourierProfile beta_inv = FourierProfile::constant(1.0);

  int max_mode() const { return std::max({kappa.max_mode(), p.max_mode(), beta_inv.max_mode()}); }

  void validate(std::size_t n) const {
    if (4 * static_cast<std::size_t>(max_mode()) > n)
      throw std::invalid_argument("profile modes must not exceed N/4");
    for (std::size_t x = 0; x < n; ++x)
      if (beta_inv(static_cast<double>(x) / static_cast<double>(n)) < 0.0)
        throw std::invalid_argument("beta_inv profile must be nonnegative");
  }
};

inline void gibbs_site(ChainState& s, std::size_t x, double mean_k, double mean_p, double beta_inv,
                       Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const double sp = std::sqrt(beta_inv);
  const double sk = s.params.alpha > 0.0 ? std::sqrt(beta_inv / s.params.alpha) : 0.0;
  s.momentum[x] = mean_p + sp * z(rng);
  s.curvature[x] = mean_k + sk * z(rng);
}

inline ChainState sample_gibbs(const ModelParams& params, const GibbsParams& g, std::size_t n,
                               Rng& rng) {
  g.validate();
  if (!(params.alpha > 0.0) && g.tau != 0.0)
    throw std::invalid_argument("sample_gibbs: tau needs alpha > 0");
  ChainState s(n, params);
  const double mk = params.alpha > 0.0 ? g.tau / params.alpha : 0.0;
  for (std::size_t x = 0; x < n; ++x) gibbs_site(s, x, mk, g.pbar, 1.0 / g.beta, rng);
  return s;
}

inline ChainState sample_gibbs(const ModelParams& params, const GibbsParams& g, std::size_t n,
                               std::uint64_t seed) {
  Rng rng = derive_stream(seed, 0);
  return sample_gibbs(params, g, n, rng);
}

inline ChainState sample_local_gibbs(const ModelParams& params, const MacroProfiles& prof,
                                     std::size_t n, Rng& rng) {
  prof.validate(n);
  ChainState s(n, params);
  for (std::size_t x = 0; x < n; ++x) {
    const double y = static_cast<double>(x) / static_cast<double>(n);
    gibbs_site(s, x, prof.kappa(y), prof.p(y), prof.beta_inv(y), rng);
  }
  return s;
}

inline ChainState sample_local_gibbs(const ModelParams& params, const MacroProfiles& prof,
                                     std::size_t n, std::uint64_t seed) {
  Rng rng = derive_stream(seed, 0);
  return sample_local_gibbs(params, prof, n, rng);
}

// Exact site means and variances of the local Gibbs law.
struct SiteMoments {
  std::vector<double> mean_k, mean_p, var_k, var_p;
};

inline SiteMoments local_gibbs_moments(const ModelParams& params, const MacroProfiles& prof,
                                       std::size_t n) {
  SiteMoments m;
  m.mean_k.resize(n);
  m.mean_p.resize(n);
  m.var_k.resize(n);
  m.var_p.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    const double y = static_cast<double>(x) / static_cast<double>(n);
    const double bi = prof.beta_inv(y);
    m.mean_k[x] = prof.kappa(y);
    m.mean_p[x] = prof.p(y);
    m.var_p[x] = bi;
    m.var_k[x] = params.alpha > 0.0 ? bi / params.alpha : 0.0;
  }
  return m;
}

// Macroscopic energy of the local Gibbs law: 1/2 (p2 + alpha kappa2), p2 = p^2 + 1/beta,
// kappa2 = kappa^2 + 1/(alpha beta).
inline double local_gibbs_energy(const ModelParams& params, const MacroProfiles& prof, double y) {
  const double p = prof.p(y), k = prof.kappa(y), bi = prof.beta_inv(y);
  return 0.5 * (p * p + params.alpha * k * k) + (params.alpha > 0.0 ? bi : 0.5 * bi);
}

}  // namespace nachain

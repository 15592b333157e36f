#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nachain/chain.hpp"
#include "nachain/fft.hpp"
#include "nachain/wigner.hpp"

namespace nachain {

using Ensemble = std::vector<ChainState>;

enum class Field { momentum, curvature, energy };

inline Field parse_field(const std::string& s) {
  if (s == "momentum" || s == "p") return Field::momentum;
  if (s == "curvature" || s == "kappa") return Field::curvature;
  if (s == "energy" || s == "e") return Field::energy;
  throw std::invalid_argument("unknown field: " + s);
}

namespace detail {
inline std::size_t check_ensemble(const Ensemble& ens, std::size_t min_size = 1) {
  if (ens.size() < min_size)
    throw std::invalid_argument("ensemble needs at least " + std::to_string(min_size) + " replicas");
  const std::size_t n = ens.front().N();
  for (const auto& s : ens)
    if (s.N() != n) throw std::invalid_argument("ensemble replicas have different N");
  return n;
}

inline double site_value(const ChainState& s, Field f, std::size_t x) {
  switch (f) {
    case Field::momentum: return s.momentum[x];
    case Field::curvature: return s.curvature[x];
    default: return s.site_energy(x);
  }
}

inline std::vector<double> block_average(const std::vector<double>& v, std::size_t blocks) {
  const std::size_t n = v.size();
  if (blocks == 0 || n % blocks != 0) throw std::invalid_argument("blocks must divide N");
  const std::size_t len = n / blocks;
  std::vector<double> out(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    double s = 0.0;
    for (std::size_t x = b * len; x < (b + 1) * len; ++x) s += v[x];
    out[b] = s / static_cast<double>(len);
  }
  return out;
}
}  // namespace detail

// Ensemble mean of a site field, one value per site.
inline std::vector<double> site_mean(const Ensemble& ens, Field f) {
  const std::size_t n = detail::check_ensemble(ens);
  std::vector<double> m(n, 0.0);
  for (const auto& s : ens)
    for (std::size_t x = 0; x < n; ++x) m[x] += detail::site_value(s, f, x);
  for (auto& v : m) v /= static_cast<double>(ens.size());
  return m;
}

// Block averages of the ensemble mean.  Block b covers y in [b/blocks, (b+1)/blocks).
inline std::vector<double> macro_profile(const Ensemble& ens, Field f, std::size_t blocks) {
  return detail::block_average(site_mean(ens, f), blocks);
}

struct EnergySpectrum {
  std::vector<double> values;  // at k = j/N
};

// 1/2 [<|p~hat|^2> + alpha <|k~hat|^2>] of the fluctuation fields, unbiased in the replica count.
inline EnergySpectrum energy_spectrum(const Ensemble& ens) {
  const std::size_t n = detail::check_ensemble(ens, 2);
  const auto mk = site_mean(ens, Field::curvature), mp = site_mean(ens, Field::momentum);
  const double alpha = ens.front().params.alpha;
  RealFFT fft(n);
  std::vector<double> dk(n), dp(n);
  std::vector<cplx> kh(fft.modes()), ph(fft.modes());
  std::vector<double> acc(fft.modes(), 0.0);
  for (const auto& s : ens) {
    for (std::size_t x = 0; x < n; ++x) {
      dk[x] = s.curvature[x] - mk[x];
      dp[x] = s.momentum[x] - mp[x];
    }
    fft.forward(dk.data(), kh.data());
    fft.forward(dp.data(), ph.data());
    for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += std::norm(ph[m]) + alpha * std::norm(kh[m]);
  }
  EnergySpectrum e{std::vector<double>(n)};
  const double scale = 0.5 / static_cast<double>(ens.size() - 1);
  for (std::size_t j = 0; j < n; ++j) e.values[j] = scale * acc[j <= n / 2 ? j : n - j];
  return e;
}

// Mean fluctuation energy per replica, normalized as energy_spectrum: eps sum_x <e~_x>.
inline double fluctuation_energy(const Ensemble& ens) {
  const std::size_t n = detail::check_ensemble(ens, 2);
  const auto mk = site_mean(ens, Field::curvature), mp = site_mean(ens, Field::momentum);
  const double alpha = ens.front().params.alpha;
  double s = 0.0;
  for (const auto& st : ens)
    for (std::size_t x = 0; x < n; ++x) {
      const double a = st.momentum[x] - mp[x], b = st.curvature[x] - mk[x];
      s += 0.5 * (a * a + alpha * b * b);
    }
  return s / (static_cast<double>(ens.size() - 1) * static_cast<double>(n));
}

// Empirical Fourier-Wigner rows for eta in [-H, H] from raw (not centred) second moments.
inline WignerGrid wigner_estimate(const Ensemble& ens, int H) {
  const std::size_t n = detail::check_ensemble(ens);
  if (H < 0 || 2 * static_cast<std::size_t>(H) > n) throw std::invalid_argument("need 0 <= H <= N/2");
  WignerGrid g = WignerGrid::zeros(n, eta_range(H));
  ComplexFFT fft(n);
  const double scale = 0.5 / static_cast<double>(n) / static_cast<double>(ens.size());
  for (const auto& s : ens) {
    const auto w = wave_field(s, fft).psi_hat;
    for (auto& r : g.rows)
      for (std::size_t j = 0; j < n; ++j) {
        const long long jj = static_cast<long long>(j);
        r.w_plus[j] += scale * std::conj(w[j]) * w[wrap_index(jj + r.eta, n)];
        r.y_plus[j] += scale * w[wrap_index(-jj, n)] * w[wrap_index(jj + r.eta, n)];
        r.y_minus[j] += scale * std::conj(w[wrap_index(-jj - r.eta, n)] * w[j]);
      }
  }
  return g;
}

struct ThermalSplit {
  std::vector<double> e_mech, e_th;
};

// e_mech from block means of p and k; e_th = e - e_mech.
inline ThermalSplit thermal_split(const Ensemble& ens, std::size_t blocks) {
  detail::check_ensemble(ens, 2);
  const double alpha = ens.front().params.alpha;
  const auto e = macro_profile(ens, Field::energy, blocks);
  const auto p = macro_profile(ens, Field::momentum, blocks);
  const auto k = macro_profile(ens, Field::curvature, blocks);
  ThermalSplit out{std::vector<double>(blocks), std::vector<double>(blocks)};
  for (std::size_t b = 0; b < blocks; ++b) {
    out.e_mech[b] = 0.5 * (p[b] * p[b] + alpha * k[b] * k[b]);
    out.e_th[b] = e[b] - out.e_mech[b];
  }
  return out;
}

// eps^r (1/N) sum_k E(k)^r.
inline double lr_norm(const EnergySpectrum& e, double r) {
  if (!(r > 1.0)) throw std::invalid_argument("lr_diagnostic: r must exceed 1");
  const double n = static_cast<double>(e.values.size());
  double s = 0.0;
  for (double v : e.values) s += std::pow(v, r);
  return std::pow(1.0 / n, r) * s / n;
}

inline double lr_diagnostic(const Ensemble& ens, double r) { return lr_norm(energy_spectrum(ens), r); }

}  // namespace nachain

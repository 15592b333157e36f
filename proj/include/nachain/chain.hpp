#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nachain/fft.hpp"
#include "nachain/kernels.hpp"

namespace nachain {

using Rng = std::mt19937_64;

// Independent engine for (seed, stream); stream is e.g. a replica index.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    tag};
  return Rng(seq);
}

struct ChainState {
  std::vector<double> curvature;
  std::vector<double> momentum;
  ModelParams params;

  ChainState() = default;
  ChainState(std::size_t n, ModelParams p) : curvature(n, 0.0), momentum(n, 0.0), params(p) {}

  std::size_t N() const { return momentum.size(); }

  void validate() const {
    params.validate();
    if (curvature.size() != momentum.size())
      throw std::invalid_argument("ChainState: curvature and momentum lengths differ");
    if (N() < 8) throw std::invalid_argument("ChainState: N must be at least 8");
  }

  double site_energy(std::size_t x) const {
    return 0.5 * momentum[x] * momentum[x] + 0.5 * params.alpha * curvature[x] * curvature[x];
  }
  double energy() const {
    double e = 0.0;
    for (std::size_t x = 0; x < N(); ++x) e += site_energy(x);
    return e;
  }
  double total_momentum() const { return std::accumulate(momentum.begin(), momentum.end(), 0.0); }
  double total_curvature() const {
    return std::accumulate(curvature.begin(), curvature.end(), 0.0);
  }
};

// psi_hat(m/N) = sum_x (sqrt(alpha) k_x + i p_x) e^{-2 pi i m x / N}.
struct WaveField {
  std::vector<cplx> psi_hat;
};

inline WaveField wave_field(const ChainState& s, ComplexFFT& fft) {
  const std::size_t n = s.N();
  std::vector<cplx> psi(n);
  const double sa = std::sqrt(s.params.alpha);
  for (std::size_t x = 0; x < n; ++x) psi[x] = cplx(sa * s.curvature[x], s.momentum[x]);
  WaveField w{std::vector<cplx>(n)};
  fft.forward(psi.data(), w.psi_hat.data());
  return w;
}

inline WaveField wave_field(const ChainState& s) {
  ComplexFFT fft(s.N());
  return wave_field(s, fft);
}

enum class Sweep { three_color_randomized, random_permutation };

inline Sweep parse_sweep(const std::string& s) {
  if (s == "three_color_randomized") return Sweep::three_color_randomized;
  if (s == "random_permutation") return Sweep::random_permutation;
  throw std::invalid_argument("unknown sweep: " + s);
}

inline const char* sweep_name(Sweep s) {
  return s == Sweep::three_color_randomized ? "three_color_randomized" : "random_permutation";
}

inline constexpr double kMaxNoiseRate = 2.25;

struct NoiseSchedule {
  double dt = 0.05;
  std::uint64_t seed = 0;
  Sweep sweep = Sweep::three_color_randomized;

  static double default_dt(const ModelParams& p) {
    return 0.05 / std::max({1.0, 2.0 * std::sqrt(p.alpha), p.gamma * kMaxNoiseRate});
  }

  void validate(const ModelParams& p) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (dt * p.gamma * kMaxNoiseRate >= 0.5)
      throw std::invalid_argument("dt*gamma*max R must stay below 0.5");
  }
};

// Right-handed rotation of (a, b, c) about (1,1,1)/sqrt(3) by phi.
inline void rotate_triple(double& a, double& b, double& c, double phi) {
  const double cs = std::cos(phi), sn = std::sin(phi) / std::sqrt(3.0);
  const double m = (a + b + c) / 3.0 * (1.0 - cs);
  const double a0 = a, b0 = b, c0 = c;
  a = a0 * cs + (c0 - b0) * sn + m;
  b = b0 * cs + (a0 - c0) * sn + m;
  c = c0 * cs + (b0 - a0) * sn + m;
}

// Exact flow of Y_x on (p_{x-1}, p_x, p_{x+1}) for Brownian increment theta.
inline void noise_flow(double& pm, double& p0, double& pp, double theta) {
  rotate_triple(pm, p0, pp, -std::sqrt(3.0) * theta);
}

// Classes of sites whose triples are pairwise disjoint on the ring.
inline std::vector<std::vector<std::size_t>> noise_color_classes(std::size_t n) {
  const std::size_t m = 3 * (n / 3);
  std::vector<std::vector<std::size_t>> classes(3);
  for (std::size_t x = 0; x < m; ++x) classes[x % 3].push_back(x);
  for (std::size_t x = m; x < n; ++x) classes.push_back({x});
  return classes;
}

// Reusable workspace for one ring size.  Not shareable across threads.
class Integrator {
 public:
  explicit Integrator(std::size_t n)
      : n_(n), fft_(n), khat_(n / 2 + 1), phat_(n / 2 + 1), classes_(noise_color_classes(n)),
        order_(n) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  std::size_t N() const { return n_; }

  // Exact deterministic flow over time dt: psi_hat <- exp(-i Omega dt) psi_hat.
  void harmonic_step(ChainState& s, double dt) {
    check(s);
    prepare_phases(s.params, dt);
    fft_.forward(s.curvature.data(), khat_.data());
    fft_.forward(s.momentum.data(), phat_.data());
    for (std::size_t m = 0; m < khat_.size(); ++m) {
      const cplx k = khat_[m], p = phat_[m];
      khat_[m] = cos_[m] * k + sin_over_[m] * p;
      phat_[m] = cos_[m] * p - sin_times_[m] * k;
    }
    fft_.inverse(khat_.data(), s.curvature.data());
    fft_.inverse(phat_.data(), s.momentum.data());
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t x = 0; x < n_; ++x) {
      s.curvature[x] *= inv;
      s.momentum[x] *= inv;
    }
  }

  void noise_step(ChainState& s, double dt, Rng& rng, Sweep sweep = Sweep::three_color_randomized) {
    check(s);
    std::normal_distribution<double> gauss(0.0, std::sqrt(s.params.gamma * dt));
    auto& p = s.momentum;
    auto site = [&](std::size_t x) {
      const std::size_t xm = (x + n_ - 1) % n_, xp = (x + 1) % n_;
      noise_flow(p[xm], p[x], p[xp], gauss(rng));
    };
    if (sweep == Sweep::three_color_randomized) {
      std::vector<std::size_t> cls(classes_.size());
      std::iota(cls.begin(), cls.end(), std::size_t{0});
      std::shuffle(cls.begin(), cls.end(), rng);
      for (std::size_t c : cls)
        for (std::size_t x : classes_[c]) site(x);
    } else {
      std::shuffle(order_.begin(), order_.end(), rng);
      for (std::size_t x : order_) site(x);
    }
  }

  // Nearest-neighbour momentum exchange; each bond fires at most once per window.
  void swap_noise_step(ChainState& s, double dt, Rng& rng) {
    check(s);
    std::bernoulli_distribution fire(1.0 - std::exp(-s.params.gamma * dt));
    std::shuffle(order_.begin(), order_.end(), rng);
    for (std::size_t x : order_)
      if (fire(rng)) std::swap(s.momentum[x], s.momentum[(x + 1) % n_]);
  }

  void step(ChainState& s, const NoiseSchedule& sched, Rng& rng) {
    harmonic_step(s, 0.5 * sched.dt);
    noise_step(s, sched.dt, rng, sched.sweep);
    harmonic_step(s, 0.5 * sched.dt);
  }

  // nsteps consecutive step() calls with adjacent harmonic halves merged.
  void advance(ChainState& s, const NoiseSchedule& sched, std::size_t nsteps, Rng& rng) {
    if (nsteps == 0) return;
    harmonic_step(s, 0.5 * sched.dt);
    for (std::size_t i = 0; i < nsteps; ++i) {
      noise_step(s, sched.dt, rng, sched.sweep);
      harmonic_step(s, i + 1 == nsteps ? 0.5 * sched.dt : sched.dt);
    }
  }

 private:
  void check(const ChainState& s) const {
    if (s.N() != n_) throw std::invalid_argument("Integrator: ring size mismatch");
  }

  void prepare_phases(const ModelParams& p, double dt) {
    if (dt == cached_dt_ && p.alpha == cached_alpha_) return;
    const std::size_t modes = n_ / 2 + 1;
    cos_.resize(modes);
    sin_over_.resize(modes);
    sin_times_.resize(modes);
    const double sa = std::sqrt(p.alpha);
    for (std::size_t m = 0; m < modes; ++m) {
      const double s = sinpi(static_cast<double>(m) / static_cast<double>(n_));
      const double lap = 4.0 * s * s;  // minus the symbol of the lattice Laplacian
      const double w = sa * lap * dt;
      cos_[m] = std::cos(w);
      sin_times_[m] = sa * std::sin(w);
      sin_over_[m] = sa > 0.0 ? std::sin(w) / sa : lap * dt;
    }
    cached_dt_ = dt;
    cached_alpha_ = p.alpha;
  }

  std::size_t n_;
  RealFFT fft_;
  std::vector<cplx> khat_, phat_;
  std::vector<std::vector<std::size_t>> classes_;
  std::vector<std::size_t> order_;
  std::vector<double> cos_, sin_over_, sin_times_;
  double cached_dt_ = -1.0, cached_alpha_ = -1.0;
};

inline void harmonic_step(ChainState& s, double dt) { Integrator(s.N()).harmonic_step(s, dt); }

inline void noise_step(ChainState& s, double dt, Rng& rng,
                       Sweep sweep = Sweep::three_color_randomized) {
  Integrator(s.N()).noise_step(s, dt, rng, sweep);
}

inline void swap_noise_step(ChainState& s, double dt, Rng& rng) {
  Integrator(s.N()).swap_noise_step(s, dt, rng);
}

inline void step(ChainState& s, const NoiseSchedule& sched, Rng& rng) {
  Integrator(s.N()).step(s, sched, rng);
}

}  // namespace nachain

#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "nachain/config.hpp"
#include "nachain/ensemble.hpp"
#include "nachain/gibbs.hpp"
#include "nachain/io.hpp"
#include "nachain/macro.hpp"
#include "nachain/moments.hpp"
#include "nachain/observables.hpp"
#include "nachain/resolvent.hpp"

namespace nachain {

// Micro time for a macroscopic time under diffusive scaling.
inline double micro_time(double t_macro, std::size_t n) {
  return t_macro * static_cast<double>(n) * static_cast<double>(n);
}

inline NoiseSchedule schedule_for(const RunConfig& c) {
  NoiseSchedule s;
  s.dt = c.dt > 0.0 ? c.dt : NoiseSchedule::default_dt(c.model);
  s.seed = c.seed;
  s.sweep = c.sweep;
  return s;
}

inline Sampler sampler_for(const RunConfig& c, std::size_t n) {
  if (c.init == "gibbs")
    return [c, n](std::size_t, Rng& rng) { return sample_gibbs(c.model, c.gibbs, n, rng); };
  return [c, n](std::size_t, Rng& rng) { return sample_local_gibbs(c.model, c.profiles, n, rng); };
}

// Macro initial data with enough modes for the quadratic source.
inline MacroFields macro_initial(const RunConfig& c) {
  const int H = std::max(c.H, 2 * c.profiles.max_mode());
  return MacroFields::from_profiles(c.profiles, H, c.model.alpha);
}

struct ErrorRow {
  std::size_t N;
  double t;
  std::string field;
  double l2_err, linf_err, l2_rel;
};

// Structure of the eta-rows: thermal part = W minus the mean-field part.
struct WignerSplitRow {
  std::size_t N;
  double t;
  int eta;
  cplx thermal_mean, eth_macro;
  double max_k_deviation;  // max_j |W_th(eta, j) - mean|, relative to |eth_macro(0)|
  double mech_near_zero;   // share of sum_j |W_mech| on |k| <= H/N
};

struct CompareResult {
  std::size_t blocks = 0;
  std::vector<ErrorRow> errors;
  std::vector<WignerSplitRow> split;
};

namespace detail {
// Per-site micro fields at one time.
struct SiteFields {
  std::vector<double> p, kappa, e, e_mech, e_th;
};

inline SiteFields site_fields_from_moments(const std::vector<double>& kbar, const std::vector<double>& pbar,
                                           const WignerGrid& g, double alpha) {
  const std::size_t n = pbar.size();
  SiteFields f;
  f.p = pbar;
  f.kappa = kbar;
  f.e.assign(n, 0.0);
  for (const auto& r : g.rows) {
    const cplx c = g.energy_coefficient(r.eta);
    for (std::size_t x = 0; x < n; ++x)
      f.e[x] += (c * std::polar(1.0, 2.0 * std::numbers::pi * r.eta * static_cast<double>(x) / static_cast<double>(n))).real();
  }
  f.e_mech.resize(n);
  f.e_th.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    f.e_mech[x] = 0.5 * (pbar[x] * pbar[x] + alpha * kbar[x] * kbar[x]);
    f.e_th[x] = f.e[x] - f.e_mech[x];
  }
  return f;
}

inline SiteFields site_fields_from_ensemble(const Ensemble& ens) {
  SiteFields f;
  f.p = site_mean(ens, Field::momentum);
  f.kappa = site_mean(ens, Field::curvature);
  f.e = site_mean(ens, Field::energy);
  const double alpha = ens.front().params.alpha;
  for (std::size_t x = 0; x < f.p.size(); ++x) {
    f.e_mech.push_back(0.5 * (f.p[x] * f.p[x] + alpha * f.kappa[x] * f.kappa[x]));
    f.e_th.push_back(f.e[x] - f.e_mech.back());
  }
  return f;
}

inline SiteFields site_fields_from_macro(const MacroFields& m, std::size_t n, double alpha) {
  SiteFields f;
  for (std::size_t x = 0; x < n; ++x) {
    const double y = static_cast<double>(x) / static_cast<double>(n);
    const double p = evaluate_series(m.p_hat, m.H, y), k = evaluate_series(m.kappa_hat, m.H, y);
    f.p.push_back(p);
    f.kappa.push_back(k);
    f.e_mech.push_back(0.5 * (p * p + alpha * k * k));
    f.e_th.push_back(evaluate_series(m.eth_hat, m.H, y));
    f.e.push_back(f.e_mech.back() + f.e_th.back());
  }
  return f;
}

inline void push_errors(std::vector<ErrorRow>& out, std::size_t n, double t, const std::string& name,
                        const std::vector<double>& micro, const std::vector<double>& macro, std::size_t blocks) {
  const auto a = block_average(micro, blocks), b = block_average(macro, blocks);
  double s = 0.0, ref = 0.0, inf = 0.0;
  for (std::size_t i = 0; i < blocks; ++i) {
    s += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
    inf = std::max(inf, std::abs(a[i] - b[i]));
  }
  const double l2 = std::sqrt(s / static_cast<double>(blocks));
  const double rn = std::sqrt(ref / static_cast<double>(blocks));
  out.push_back({n, t, name, l2, inf, rn > 0.0 ? l2 / rn : l2});
}

inline std::size_t default_blocks(const RunConfig& c, const std::vector<std::size_t>& ns) {
  std::size_t b = c.blocks ? c.blocks : 32;
  for (auto n : ns) b = std::gcd(b, n);
  for (auto n : ns)
    if (n % b) throw std::invalid_argument("observables.blocks must divide every N");
  return b;
}
}  // namespace detail

// Block-averaged micro observables at t N^2 against the macro solution at t, per N.
inline CompareResult compare_micro_macro(const RunConfig& c) {
  std::vector<std::size_t> ns;
  for (double v : c.compare_N) ns.push_back(static_cast<std::size_t>(v));
  if (ns.empty()) ns.push_back(c.N);
  CompareResult res;
  res.blocks = detail::default_blocks(c, ns);
  const MacroFields m0 = macro_initial(c);
  const double chat = diffusivity(c.model);
  const BeamTrajectory beam{m0, c.model};

  for (std::size_t n : ns) {
    if (4 * static_cast<std::size_t>(c.profiles.max_mode()) > n)
      throw std::invalid_argument("compare: profile modes exceed N/4 for N=" + std::to_string(n));
    if (c.micro == "moments") {
      const SiteMoments sm = local_gibbs_moments(c.model, c.profiles, n);
      const int H = std::min<int>(m0.H, static_cast<int>(n / 2));
      WignerGrid g = wigner_from_site_moments(sm, c.model.alpha, eta_range(H));
      std::vector<double> kbar = sm.mean_k, pbar = sm.mean_p;
      double t_prev = 0.0;
      for (double t : c.t_macro) {
        const double dt_micro = micro_time(t - t_prev, n);
        g = evolve_moments(g, dt_micro, c.model, {c.moment_dt, c.threads});
        evolve_mean_fields(kbar, pbar, dt_micro, c.model);
        t_prev = t;
        const auto micro = detail::site_fields_from_moments(kbar, pbar, g, c.model.alpha);
        const MacroFields mt = thermal_solve(m0, beam, t, c.model, chat);
        const auto macro = detail::site_fields_from_macro(mt, n, c.model.alpha);
        detail::push_errors(res.errors, n, t, "p", micro.p, macro.p, res.blocks);
        detail::push_errors(res.errors, n, t, "kappa", micro.kappa, macro.kappa, res.blocks);
        detail::push_errors(res.errors, n, t, "e_mech", micro.e_mech, macro.e_mech, res.blocks);
        detail::push_errors(res.errors, n, t, "e_th", micro.e_th, macro.e_th, res.blocks);

        // Wigner rows: subtract the mean-field part, the rest should be flat in k
        const MeanField mf = mean_field_from(kbar, pbar, c.model.alpha);
        const double half_eps = 0.5 / static_cast<double>(n);
        const double scale = std::abs(mt.eth(0));
        for (const auto& r : g.rows) {
          std::vector<cplx> th(n);
          cplx mean = 0.0;
          double mech_all = 0.0, mech_low = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const cplx mech = half_eps * std::conj(mf.psi_bar[j]) *
                              mf.psi_bar[wrap_index(static_cast<long long>(j) + r.eta, n)];
            th[j] = r.w_plus[j] - mech;
            mean += th[j];
            mech_all += std::abs(mech);
            if (std::abs(g.k(r.eta, j)) <= static_cast<double>(H) / static_cast<double>(n)) mech_low += std::abs(mech);
          }
          mean /= static_cast<double>(n);
          double dev = 0.0;
          for (auto v : th) dev = std::max(dev, std::abs(v - mean));
          const cplx em = std::abs(r.eta) <= mt.H ? mt.eth(r.eta) : cplx(0.0);
          res.split.push_back({n, t, r.eta, mean, em, scale > 0.0 ? dev / scale : dev,
                               mech_all > 0.0 ? mech_low / mech_all : 1.0});
        }
      }
    } else {
      RunConfig cn = c;
      cn.N = n;
      std::vector<double> times;
      for (double t : c.t_macro) times.push_back(micro_time(t, n));
      const auto run = run_ensemble(sampler_for(cn, n), schedule_for(cn), times, c.replicas, nullptr,
                                    {c.threads, c.swap_noise});
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = c.t_macro[i];
        const auto micro = detail::site_fields_from_ensemble(run.at(i));
        const MacroFields mt = thermal_solve(m0, beam, t, c.model, chat);
        const auto macro = detail::site_fields_from_macro(mt, n, c.model.alpha);
        detail::push_errors(res.errors, n, t, "p", micro.p, macro.p, res.blocks);
        detail::push_errors(res.errors, n, t, "kappa", micro.kappa, macro.kappa, res.blocks);
        detail::push_errors(res.errors, n, t, "e_mech", micro.e_mech, macro.e_mech, res.blocks);
        detail::push_errors(res.errors, n, t, "e_th", micro.e_th, macro.e_th, res.blocks);
      }
    }
  }
  return res;
}

struct RunResult {
  std::vector<std::filesystem::path> files;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

namespace detail {
inline void simulate(const RunConfig& c, const std::filesystem::path& out, RunResult& rr) {
  const NoiseSchedule sched = schedule_for(c);
  std::vector<double> times;
  for (double t : c.t_macro) times.push_back(micro_time(t, c.N));
  const auto run = run_ensemble(sampler_for(c, c.N), sched, times, c.replicas, nullptr, {c.threads, c.swap_noise});
  const bool csv = std::find(c.formats.begin(), c.formats.end(), "csv") != c.formats.end();
  const bool bin = std::find(c.formats.begin(), c.formats.end(), "binary") != c.formats.end();
  const std::size_t blocks = c.blocks ? c.blocks : std::gcd<std::size_t>(c.N, 32);
  if (csv) {
    CsvWriter traj(out / "trajectory.csv", {"t", "x", "k_x", "p_x", "e_x"});
    for (std::size_t i = 0; i < times.size(); ++i) write_trajectory_csv(traj, c.t_macro[i], run.at(i).front());
    rr.files.push_back(traj.path());
    CsvWriter prof(out / "profiles.csv", {"t", "y", "p", "kappa", "e", "e_mech", "e_th"});
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto f = site_fields_from_ensemble(run.at(i));
      const auto p = block_average(f.p, blocks), k = block_average(f.kappa, blocks),
                 e = block_average(f.e, blocks);
      for (std::size_t b = 0; b < blocks; ++b) {
        const double em = 0.5 * (p[b] * p[b] + c.model.alpha * k[b] * k[b]);
        prof.row(c.t_macro[i], (static_cast<double>(b) + 0.5) / static_cast<double>(blocks), p[b], k[b], e[b],
                 em, e[b] - em);
      }
    }
    rr.files.push_back(prof.path());
    if (c.replicas >= 2) {
      CsvWriter sp(out / "spectrum.csv", {"t", "k", "value"});
      for (std::size_t i = 0; i < times.size(); ++i) {
        const auto s = energy_spectrum(run.at(i));
        for (std::size_t j = 0; j < s.values.size(); ++j)
          sp.row(c.t_macro[i], static_cast<double>(j) / static_cast<double>(c.N), s.values[j]);
        rr.summary["lr2_t" + std::to_string(i)] = lr_norm(s, 2.0);
      }
      rr.files.push_back(sp.path());
    }
    write_gnuplot(out / "simulate.gp", "block profiles", "y", "value",
                  {{"profiles.csv", "2:3", "p"}, {"profiles.csv", "2:7", "e_th"}});
    rr.files.push_back(out / "simulate.gp");
  }
  if (bin)
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto p = out / ("state_t" + std::to_string(i) + ".bin");
      write_dump(p, run.at(i).front());
      rr.files.push_back(p);
    }
  rr.summary["dt"] = sched.dt;
  rr.summary["final_energy_replica0"] = run.at(times.size() - 1).front().energy();
}

inline void moments(const RunConfig& c, const std::filesystem::path& out, RunResult& rr) {
  const SiteMoments sm = local_gibbs_moments(c.model, c.profiles, c.N);
  WignerGrid g = wigner_from_site_moments(sm, c.model.alpha, eta_range(c.H));
  std::vector<double> kbar = sm.mean_k, pbar = sm.mean_p;
  CsvWriter modes(out / "energy_modes.csv", {"t", "eta", "e_re", "e_im", "e_mech_re", "e_mech_im", "e_th_re", "e_th_im"});
  const double e0 = g.total_energy();
  double t_prev = 0.0;
  for (std::size_t i = 0; i < c.t_macro.size(); ++i) {
    const double t = c.t_macro[i];
    const double dt_micro = micro_time(t - t_prev, c.N);
    g = evolve_moments(g, dt_micro, c.model, {c.moment_dt, c.threads});
    evolve_mean_fields(kbar, pbar, dt_micro, c.model);
    t_prev = t;
    std::vector<double> em(c.N);
    for (std::size_t x = 0; x < c.N; ++x) em[x] = 0.5 * (pbar[x] * pbar[x] + c.model.alpha * kbar[x] * kbar[x]);
    RealFFT fft(c.N);
    std::vector<cplx> emh(fft.modes());
    fft.forward(em.data(), emh.data());
    for (const auto& r : g.rows) {
      const cplx e = g.energy_coefficient(r.eta);
      const std::size_t a = wrap_index(r.eta, c.N);
      const cplx m = (a <= c.N / 2 ? emh[a] : std::conj(emh[c.N - a])) / static_cast<double>(c.N);
      const cplx th = e - m;
      modes.row(t, r.eta, e.real(), e.imag(), m.real(), m.imag(), th.real(), th.imag());
    }
    const auto p = out / ("wigner_t" + std::to_string(i) + ".csv");
    write_wigner_csv(p, g, t, "deterministic");
    rr.files.push_back(p);
  }
  rr.files.push_back(modes.path());
  rr.summary["total_energy_initial"] = e0;
  rr.summary["total_energy_final"] = g.total_energy();
  write_gnuplot(out / "moments.gp", "energy modes", "eta", "e_th", {{"energy_modes.csv", "2:7", "Re e_th"}});
  rr.files.push_back(out / "moments.gp");
}

inline void macro(const RunConfig& c, const std::filesystem::path& out, RunResult& rr) {
  const MacroFields m0 = macro_initial(c);
  const BeamTrajectory beam{m0, c.model};
  const double chat = diffusivity(c.model);
  CsvWriter w(out / "macro.csv", {"t", "y", "kappa", "p", "e_mech", "e_th"});
  CsvWriter en(out / "macro_energy.csv", {"t", "e_th_total", "e_mech_total", "total"});
  for (double t : c.t_macro) {
    const MacroFields mt = thermal_solve(m0, beam, t, c.model, chat);
    for (const auto& r : macro_grid(mt, c.model.alpha, c.grid)) w.row(t, r.y, r.kappa, r.p, r.e_mech, r.e_th);
    en.row(t, mt.eth(0).real(), mech_energy_total(mt, c.model.alpha), total_energy(mt, c.model.alpha));
  }
  rr.files.push_back(w.path());
  rr.files.push_back(en.path());
  rr.summary["diffusivity"] = chat;
  write_gnuplot(out / "macro.gp", "macroscopic fields", "y", "value",
                {{"macro.csv", "2:4", "p"}, {"macro.csv", "2:6", "e_th"}});
  rr.files.push_back(out / "macro.gp");
}

inline void resolvent(const RunConfig& c, const std::filesystem::path& out, RunResult& rr) {
  std::vector<double> ladder = c.eps_ladder;
  if (ladder.empty())
    for (int p = 4; p <= 10; ++p) ladder.push_back(std::ldexp(1.0, -p));
  ConvergenceData data;
  data.init = thermal_flat(c.eth);
  data.eth_hat = c.eth;
  const auto t = convergence_study(c.lambda, c.eta, ladder, data, c.model);
  CsvWriter w(out / "convergence.csv", {"eps", "eta", "lambda", "abs_err", "ratio_to_prev", "delta_w_over_eps2",
                                        "w_minus_re", "w_minus_im", "rel_err", "y_over_eps2", "pairing_gap",
                                        "residual"});
  for (const auto& r : t.rows)
    w.row(r.eps, c.eta, c.lambda, r.abs_err, r.ratio_to_prev, r.delta_w_over_eps2, r.w_minus_eps.real(),
          r.w_minus_eps.imag(), r.rel_err, r.y_over_eps2, r.pairing_gap, r.residual);
  rr.files.push_back(w.path());
  rr.summary["limit"] = t.limit.real();
  rr.summary["monotone_full"] = t.monotone_full;
  rr.summary["monotone_tail"] = t.monotone_tail;
  rr.summary["final_rel_err"] = t.final_rel_err;
  write_gnuplot(out / "resolvent.gp", "resolvent convergence", "eps", "abs_err",
                {{"convergence.csv", "1:4", "|w_eps - w|"}}, true);
  rr.files.push_back(out / "resolvent.gp");
}

inline void compare(const RunConfig& c, const std::filesystem::path& out, RunResult& rr) {
  const auto res = compare_micro_macro(c);
  CsvWriter w(out / "errors.csv", {"N", "t", "field", "l2_err", "linf_err", "l2_rel"});
  for (const auto& e : res.errors) w.row(e.N, e.t, e.field, e.l2_err, e.linf_err, e.l2_rel);
  rr.files.push_back(w.path());
  if (!res.split.empty()) {
    CsvWriter s(out / "wigner_split.csv", {"N", "t", "eta", "thermal_re", "thermal_im", "eth_macro_re",
                                           "eth_macro_im", "max_k_deviation", "mech_near_zero"});
    for (const auto& r : res.split)
      s.row(r.N, r.t, r.eta, r.thermal_mean.real(), r.thermal_mean.imag(), r.eth_macro.real(), r.eth_macro.imag(),
            r.max_k_deviation, r.mech_near_zero);
    rr.files.push_back(s.path());
  }
  rr.summary["blocks"] = res.blocks;
  write_gnuplot(out / "compare.gp", "micro vs macro", "N", "l2_err", {{"errors.csv", "1:4", "l2_err"}}, true);
  rr.files.push_back(out / "compare.gp");
}
}  // namespace detail

// Runs the configured experiment into `out` and writes manifest.json last.
inline RunResult run(const RunConfig& c, const std::filesystem::path& out) {
  c.validate();
  std::filesystem::create_directories(out);
  RunResult rr;
  switch (c.experiment) {
    case Experiment::simulate: detail::simulate(c, out, rr); break;
    case Experiment::moments: detail::moments(c, out, rr); break;
    case Experiment::macro: detail::macro(c, out, rr); break;
    case Experiment::resolvent: detail::resolvent(c, out, rr); break;
    case Experiment::compare: detail::compare(c, out, rr); break;
  }
  nlohmann::ordered_json m;
  m["format"] = "nachain-manifest-1";
  m["experiment"] = experiment_name(c.experiment);
  m["seed"] = c.seed;
  m["config"] = c.source_text;
  m["config_sha1"] = git_blob_sha1(c.source_text);
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  std::string all;
  for (const auto& f : rr.files) {
    const std::string h = git_blob_sha1(read_file(f));
    outs.push_back({{"file", f.filename().string()}, {"sha1", h}});
    all += h;
  }
  m["outputs"] = outs;
  m["content_sha1"] = git_blob_sha1(c.source_text + all);
  m["summary"] = rr.summary;
  std::ofstream(out / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
  rr.files.push_back(out / "manifest.json");
  return rr;
}

inline std::string error_block(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  return j.dump();
}

}  // namespace nachain

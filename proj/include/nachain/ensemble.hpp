#pragma once

#include <cmath>
#include <cstdlib>
#include <exception>
#include <algorithm>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nachain/chain.hpp"

namespace nachain {

// Explicit request wins; otherwise NACHAIN_THREADS; otherwise 1.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NACHAIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

// Runs f(i) for i in [0, count) on up to `threads` workers.  Work is split into
// contiguous index blocks, so results depend only on i.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t lo = count * t / threads, hi = count * (t + 1) / threads;
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

using Sampler = std::function<ChainState(std::size_t replica, Rng& rng)>;
using Observer = std::function<void(std::size_t replica, std::size_t time_index, double t,
                                    const ChainState& state)>;

struct EnsembleRun {
  std::vector<double> times;
  // snapshots[time_index][replica]
  std::vector<std::vector<ChainState>> snapshots;

  std::size_t replicas() const { return snapshots.empty() ? 0 : snapshots.front().size(); }
  const std::vector<ChainState>& at(std::size_t time_index) const { return snapshots.at(time_index); }
};

struct EnsembleOptions {
  unsigned threads = 0;
  bool swap_noise = false;
};

// Each replica draws its initial state and its noise from derive_stream(seed, replica).
// Snapshot times are micro times, rounded to the step grid.
inline EnsembleRun run_ensemble(const Sampler& init, const NoiseSchedule& sched,
                                const std::vector<double>& times, std::size_t replicas,
                                const Observer& observer = nullptr, EnsembleOptions opt = {}) {
  if (replicas < 1) throw std::invalid_argument("run_ensemble: replicas must be at least 1");
  std::vector<std::size_t> marks;
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("run_ensemble: negative snapshot time");
    marks.push_back(static_cast<std::size_t>(std::llround(t / sched.dt)));
  }
  for (std::size_t i = 1; i < marks.size(); ++i)
    if (marks[i] < marks[i - 1]) throw std::invalid_argument("run_ensemble: times must increase");

  EnsembleRun run;
  run.times = times;
  run.snapshots.assign(times.size(), std::vector<ChainState>(replicas));
  const unsigned threads = resolve_threads(opt.threads);
  const std::size_t per = (replicas + threads - 1) / threads;
  const std::size_t blocks = (replicas + per - 1) / per;
  parallel_for(blocks, threads, [&](std::size_t b) {
    std::unique_ptr<Integrator> integ;
    for (std::size_t r = b * per; r < std::min(replicas, (b + 1) * per); ++r) {
      Rng rng = derive_stream(sched.seed, r);
      ChainState s = init(r, rng);
      s.validate();
      sched.validate(s.params);
      if (!integ || integ->N() != s.N()) integ = std::make_unique<Integrator>(s.N());
      std::size_t done = 0;
      for (std::size_t i = 0; i < marks.size(); ++i) {
        const std::size_t n = marks[i] - done;
        if (opt.swap_noise) {
          for (std::size_t j = 0; j < n; ++j) {
            integ->harmonic_step(s, 0.5 * sched.dt);
            integ->swap_noise_step(s, sched.dt, rng);
            integ->harmonic_step(s, 0.5 * sched.dt);
          }
        } else {
          integ->advance(s, sched, n, rng);
        }
        done = marks[i];
        run.snapshots[i][r] = s;
      }
    }
  });
  if (observer) {
    for (std::size_t r = 0; r < replicas; ++r)
      for (std::size_t i = 0; i < times.size(); ++i) {
        try {
          observer(r, i, times[i], run.snapshots[i][r]);
        } catch (const std::exception& e) {
          throw std::runtime_error("observer failed at replica " + std::to_string(r) + ", t=" +
                                   std::to_string(times[i]) + ": " + e.what());
        }
      }
  }
  return run;
}

}  // namespace nachain

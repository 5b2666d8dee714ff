#include "dissoc/ensemble.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "dissoc/hfb.hpp"
#include "dissoc/positive_p.hpp"
#include "dissoc/rng.hpp"
#include "dissoc/twa.hpp"

namespace dissoc {

namespace {

constexpr Real kNaN = std::numeric_limits<Real>::quiet_NaN();

struct SaveGrid {
  std::vector<long> steps;    // step number of each save
  std::vector<char> spectra;  // saves that keep the full arrays
  RealArray times;
};

SaveGrid make_save_grid(const ValidatedConfig& cfg) {
  SaveGrid grid;
  const Real dt = cfg.grid.dt;
  const long n_steps = std::llround(cfg.grid.t_final / dt);
  for (long s = 0; s <= n_steps; s += cfg.grid.save_stride)
    grid.steps.push_back(s);
  if (grid.steps.back() != n_steps) grid.steps.push_back(n_steps);

  const std::size_t n = grid.steps.size();
  grid.times.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    grid.times[static_cast<Eigen::Index>(i)] =
        static_cast<Real>(grid.steps[i]) * dt;

  // Requested snapshot times map to the nearest save; the final save always
  // keeps spectra (validity guard, late-time structure).
  grid.spectra.assign(n, 0);
  grid.spectra.back() = 1;
  for (Real want : cfg.run.snapshot_times) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(grid.times[static_cast<Eigen::Index>(i)] - want) <
          std::abs(grid.times[static_cast<Eigen::Index>(best)] - want))
        best = i;
    }
    grid.spectra[best] = 1;
  }
  return grid;
}

int worker_count(int batches) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("PHASESPACE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1 && v < n) n = static_cast<int>(v);
  }
  return std::max(1, std::min(n, batches));
}

using Accumulators = std::vector<std::vector<MomentSet>>;  // [save][batch]
using DivergedCounts = std::vector<std::vector<long>>;

void run_pp_batch(const ValidatedConfig& cfg, const SaveGrid& grid,
                  const ModePair& modes, long lo, long hi, int batch,
                  Accumulators& acc, DivergedCounts& diverged) {
  PPStepper stepper(cfg);
  for (long traj = lo; traj < hi; ++traj) {
    Philox rng(cfg.run.master_seed, static_cast<std::uint64_t>(traj));
    PPState s = pp_init(cfg);
    long step = 0;
    for (std::size_t i = 0; i < grid.steps.size(); ++i) {
      while (step < grid.steps[i] && !s.diverged) {
        stepper.step(s, rng);
        ++step;
      }
      if (s.diverged) {
        // Excluded from this save onward; earlier contributions stand.
        for (std::size_t j = i; j < grid.steps.size(); ++j)
          diverged[j][batch] += 1;
        break;
      }
      accumulate_pp(acc[i][batch], s, stepper.dft(), modes,
                    cfg.run.g2_bin_halfwidth);
    }
  }
}

void run_twa_batch(const ValidatedConfig& cfg, const SaveGrid& grid,
                   const ModePair& modes, long lo, long hi, int batch,
                   Accumulators& acc) {
  TWAStepper stepper(cfg);
  for (long traj = lo; traj < hi; ++traj) {
    Philox rng(cfg.run.master_seed, static_cast<std::uint64_t>(traj));
    TWAState s = twa_sample_initial(cfg, rng);
    long step = 0;
    for (std::size_t i = 0; i < grid.steps.size(); ++i) {
      while (step < grid.steps[i]) {
        stepper.step(s);
        ++step;
      }
      accumulate_twa(acc[i][batch], s, stepper.dft(), modes,
                     cfg.run.g2_bin_halfwidth);
    }
  }
}

void run_deterministic(const ValidatedConfig& cfg, const SaveGrid& grid,
                       const ModePair& modes, Accumulators& acc,
                       DivergedCounts& diverged, bool progress) {
  ValidatedConfig local = cfg;
  const bool frozen = cfg.run.method == Method::undepleted;
  if (frozen) {
    // The linearized benchmark keeps only detuning, kinetic terms, and the
    // down-conversion coupling.
    local.params.u_aa = local.params.u_am = local.params.u_mm = 0;
  }
  HFBStepper stepper(local);
  stepper.set_frozen_phi_m(frozen);
  HFBState s = hfb_init(local);
  long step = 0;
  for (std::size_t i = 0; i < grid.steps.size(); ++i) {
    while (step < grid.steps[i] && !s.failed) {
      stepper.step(s);
      ++step;
    }
    if (s.failed) {
      for (std::size_t j = i; j < grid.steps.size(); ++j) diverged[j][0] = 1;
      break;
    }
    accumulate_hfb(acc[i][0], s, stepper.dft(), modes,
                   cfg.run.g2_bin_halfwidth);
    if (progress && grid.steps.size() >= 10 &&
        i % (grid.steps.size() / 10) == 0) {
      std::fprintf(stderr, "[dissoc1d] %s: t = %.4f / %.4f\n",
                   method_name(cfg.run.method),
                   grid.times[static_cast<Eigen::Index>(i)], cfg.grid.t_final);
    }
  }
}

TimeSeries assemble(const ValidatedConfig& cfg, const SaveGrid& grid,
                    const Accumulators& acc, const DivergedCounts& diverged) {
  const auto n = static_cast<Eigen::Index>(grid.steps.size());
  TimeSeries ts;
  ts.times = grid.times;
  for (RealArray* a :
       {&ts.nm_frac, &ts.nm_frac_se, &ts.na_frac, &ts.na_frac_se, &ts.g2_bb,
        &ts.g2_bb_se, &ts.g2_cl, &ts.g2_cl_se, &ts.n_plus, &ts.n_plus_se,
        &ts.n_minus, &ts.n_minus_se, &ts.na_peak, &ts.diverged_frac,
        &ts.conservation_residual})
    *a = RealArray::Constant(n, kNaN);
  ts.bb_defined.assign(static_cast<std::size_t>(n), 0);
  ts.cl_defined.assign(static_cast<std::size_t>(n), 0);
  ts.suppressed.assign(static_cast<std::size_t>(n), 0);
  ts.initial_molecules = cfg.derived.n_m0;

  const Real nm0 = cfg.derived.n_m0;
  const Real total0 = cfg.derived.total_number;
  const Real n_traj = static_cast<Real>(cfg.run.trajectories);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& batches = acc[static_cast<std::size_t>(i)];
    const MeanSE nm = scalar_estimate(batches, &MomentSet::molecules);
    const MeanSE na = scalar_estimate(batches, &MomentSet::atoms);
    const MeanSE peak = scalar_estimate(batches, &MomentSet::na_peak);
    ts.nm_frac[i] = nm.mean / nm0;
    ts.nm_frac_se[i] = nm.se / nm0;
    ts.na_frac[i] = na.mean / total0;
    ts.na_frac_se[i] = na.se / total0;
    ts.na_peak[i] = peak.mean;
    ts.conservation_residual[i] = (2 * nm.mean + na.mean - total0) / total0;

    long lost = 0;
    for (long d : diverged[static_cast<std::size_t>(i)]) lost += d;
    ts.diverged_frac[i] = static_cast<Real>(lost) / n_traj;

    const CorrelationResult corr =
        correlation_estimate(batches, cfg.run.signal_floor);
    ts.g2_bb[i] = corr.g2_bb.mean;
    ts.g2_bb_se[i] = corr.g2_bb.se;
    ts.g2_cl[i] = corr.g2_cl.mean;
    ts.g2_cl_se[i] = corr.g2_cl.se;
    ts.n_plus[i] = corr.n_plus.mean;
    ts.n_plus_se[i] = corr.n_plus.se;
    ts.n_minus[i] = corr.n_minus.mean;
    ts.n_minus_se[i] = corr.n_minus.se;
    ts.bb_defined[static_cast<std::size_t>(i)] = corr.bb_defined;
    ts.cl_defined[static_cast<std::size_t>(i)] = corr.cl_defined;
    ts.suppressed[static_cast<std::size_t>(i)] = corr.suppressed;

    if (grid.spectra[static_cast<std::size_t>(i)]) {
      TimeSeries::Snapshot snap;
      snap.t = grid.times[i];
      snap.save_index = i;
      snap.spectra = spectra_estimate(batches, cfg.derived.dx);
      ts.snapshots.push_back(std::move(snap));
    }
  }
  return ts;
}

}  // namespace

RunResult run(const ValidatedConfig& cfg) {
  const auto wall_start = std::chrono::steady_clock::now();
  const SaveGrid grid = make_save_grid(cfg);
  const ModePair modes = select_modes(cfg.derived);
  const Method method = cfg.run.method;
  const bool stochastic =
      method == Method::positive_p || method == Method::twa;
  const long n_traj = cfg.run.trajectories;
  const int n_batches =
      stochastic
          ? static_cast<int>(std::min<long>(cfg.run.n_batches, n_traj))
          : 1;
  const std::size_t n_saves = grid.steps.size();
  const bool progress = isatty(fileno(stderr)) != 0;

  Accumulators acc(n_saves);
  DivergedCounts diverged(n_saves, std::vector<long>(n_batches, 0));
  for (std::size_t i = 0; i < n_saves; ++i)
    acc[i].assign(static_cast<std::size_t>(n_batches),
                  MomentSet::zero(method, cfg.grid.num_points,
                                  grid.spectra[i] != 0));

  if (stochastic) {
    std::atomic<int> next{0}, done{0};
    auto work = [&] {
      for (;;) {
        const int b = next.fetch_add(1);
        if (b >= n_batches) return;
        const long lo = n_traj * b / n_batches;
        const long hi = n_traj * (b + 1) / n_batches;
        if (method == Method::positive_p)
          run_pp_batch(cfg, grid, modes, lo, hi, b, acc, diverged);
        else
          run_twa_batch(cfg, grid, modes, lo, hi, b, acc);
        const int finished = done.fetch_add(1) + 1;
        if (progress && (finished % std::max(1, n_batches / 10) == 0 ||
                         finished == n_batches))
          std::fprintf(stderr, "[dissoc1d] %s: %d/%d batches\n",
                       method_name(method), finished, n_batches);
      }
    };
    const int workers = worker_count(n_batches);
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (std::thread& t : pool) t.join();
    }
  } else {
    run_deterministic(cfg, grid, modes, acc, diverged, progress);
  }

  RunResult result;
  result.series = assemble(cfg, grid, acc, diverged);
  result.modes = modes;
  result.total_divergence = (result.series.diverged_frac >= 1.0).any();

  // Classical-field validity guard at the final saved time.
  const TimeSeries::Snapshot& last = result.series.snapshots.back();
  result.band_occupation = band_mean_occupation(
      last.spectra.atom_k.mean, cfg.derived.k_grid, cfg.derived.k0);
  result.twa_band_warning =
      method == Method::twa && result.band_occupation < 1.0;

  result.wall_seconds =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

std::optional<Real> detect_tmax(const TimeSeries& series) {
  const Real total0 = 2 * series.initial_molecules;
  for (Eigen::Index i = 0; i < series.times.size(); ++i) {
    if (series.diverged_frac[i] > 1e-3) return series.times[i];
    // The relative-error criterion only applies once at least one real atom
    // is present; the initial vacuum would otherwise trigger on 0/0 noise.
    const Real atoms = series.na_frac[i] * total0;
    if (atoms >= 1.0 && series.na_frac_se[i] > 0.1 * series.na_frac[i])
      return series.times[i];
  }
  return std::nullopt;
}

RunResult undepleted_reference(const ValidatedConfig& cfg) {
  RunConfig run_cfg = cfg.run;
  run_cfg.method = Method::undepleted;
  run_cfg.trajectories = 1;
  return run(validate(cfg.params, cfg.grid, run_cfg));
}

ComparisonReport compare(const std::vector<const TimeSeries*>& series) {
  ComparisonReport report;
  if (series.empty()) return report;
  const RealArray& times = series.front()->times;
  for (const TimeSeries* s : series) {
    if (s->times.size() != times.size() || !(s->times == times).all())
      throw std::invalid_argument("misaligned time grids");
  }
  report.times = times;

  auto discrepancy = [](Real a, Real a_se, Real b, Real b_se) -> Real {
    const Real diff = std::abs(a - b);
    const Real se = std::sqrt(a_se * a_se + b_se * b_se);
    if (se > 0) return diff / se;
    return diff == 0 ? 0 : std::numeric_limits<Real>::infinity();
  };

  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = i + 1; j < series.size(); ++j) {
      ComparisonReport::Pair pair;
      pair.a = i;
      pair.b = j;
      pair.nm_disc.resize(times.size());
      pair.na_disc.resize(times.size());
      pair.first_exceed_nm = kNaN;
      for (Eigen::Index k = 0; k < times.size(); ++k) {
        pair.nm_disc[k] =
            discrepancy(series[i]->nm_frac[k], series[i]->nm_frac_se[k],
                        series[j]->nm_frac[k], series[j]->nm_frac_se[k]);
        pair.na_disc[k] =
            discrepancy(series[i]->na_frac[k], series[i]->na_frac_se[k],
                        series[j]->na_frac[k], series[j]->na_frac_se[k]);
        if (std::isnan(pair.first_exceed_nm) && pair.nm_disc[k] > 3)
          pair.first_exceed_nm = times[k];
      }
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

}  // namespace dissoc

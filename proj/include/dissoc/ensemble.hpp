#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dissoc/config.hpp"
#include "dissoc/observables.hpp"
#include "dissoc/types.hpp"

namespace dissoc {

// Ensemble results on the save grid: one entry per saved time in every
// array.  Fractions are normalized to the deterministic initial numbers
// N_m(0) and 2*N_m(0).  Correlation entries are NaN wherever the estimator
// flagged them undefined or suppressed; the parallel flag vectors say which.
struct TimeSeries {
  RealArray times;
  RealArray nm_frac, nm_frac_se, na_frac, na_frac_se;
  RealArray g2_bb, g2_bb_se, g2_cl, g2_cl_se;
  RealArray n_plus, n_plus_se, n_minus, n_minus_se;
  RealArray na_peak;                // mean atomic density at x = 0 [m^-1]
  RealArray diverged_frac;          // fraction of trajectories excluded
  RealArray conservation_residual;  // (2 N_m + N_a - 2 N_m(0)) / (2 N_m(0))
  std::vector<char> bb_defined, cl_defined, suppressed;
  Real initial_molecules = 0;  // N_m(0), the normalizer behind the fractions

  // Full spectra kept at the requested snapshot times (and always at the
  // final saved time), with batch-means error bars.
  struct Snapshot {
    Real t = 0;
    Eigen::Index save_index = 0;
    SpectraEstimate spectra;
  };
  std::vector<Snapshot> snapshots;
};

struct RunResult {
  TimeSeries series;
  ModePair modes;
  // Some saved time retained no trajectories at all (or the deterministic
  // solver failed): the series holds NaN from there on.
  bool total_divergence = false;
  // Classical-field validity guard: mean atoms per mode over the band
  // 0.5*k0 <= |k| <= 1.5*k0 at the final saved time, and whether it fell
  // below one real particle.  The caller decides how loudly to warn.
  Real band_occupation = 0;
  bool twa_band_warning = false;
  Real wall_seconds = 0;
};

// Runs the configured method to t_final.  Stochastic methods execute
// cfg.run.trajectories independent runs with counter-based per-trajectory
// streams (master_seed, trajectory index), accumulated into
// trajectory-contiguous batches and merged in index order, so the result is
// bit-identical for any worker count.  Worker threads default to the
// hardware concurrency, capped by the PHASESPACE_THREADS environment
// variable.  Deterministic methods run once on the calling thread; the
// undepleted variant pins the molecular profile and switches every U term
// off.  Progress lines go to standard error only when it is a terminal.
RunResult run(const ValidatedConfig& cfg);

// Earliest saved time at which the doubled-phase-space sampling has broken
// down: diverged fraction above 0.1%, or SE(N_a) above 10% of its mean once
// the signal holds at least one atom (the guard keeps the vacuum's 0/0 from
// triggering).  std::nullopt if the series stays healthy throughout.
std::optional<Real> detect_tmax(const TimeSeries& series);

// The linearized benchmark: same grid and couplings except frozen phi_m and
// no s-wave terms.  Valid while conversion stays below ~10%.
RunResult undepleted_reference(const ValidatedConfig& cfg);

// Aligned cross-method discrepancy tables, in units of the combined standard
// error (infinite where both errors vanish but the values differ).  Throws
// std::invalid_argument on misaligned time grids.
struct ComparisonReport {
  RealArray times;
  struct Pair {
    std::size_t a = 0, b = 0;  // indices into the input list
    RealArray nm_disc, na_disc;
    // Earliest time where the molecule-fraction discrepancy exceeds 3
    // combined SEs; NaN if it never does.
    Real first_exceed_nm = 0;
  };
  std::vector<Pair> pairs;
};

ComparisonReport compare(const std::vector<const TimeSeries*>& series);

}  // namespace dissoc

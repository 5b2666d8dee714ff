#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dissoc/config.hpp"
#include "dissoc/hfb.hpp"
#include "dissoc/positive_p.hpp"
#include "dissoc/spectral.hpp"
#include "dissoc/twa.hpp"
#include "dissoc/types.hpp"

namespace dissoc {

// Grid modes nearest +k0 and -k0.  For even M the selected pair is exactly
// opposite: k(minus) == -k(plus), which is what the back-to-back correlation
// measures.
struct ModePair {
  Eigen::Index plus = 0, minus = 0;
};

ModePair select_modes(const DerivedQuantities& derived);

// Per-trajectory number integrands.  The imaginary parts are a sanity
// diagnostic: each trajectory may have one, but the ensemble mean of a
// Hermitian observable must not.
struct NumberIntegrands {
  Real atoms = 0, molecules = 0;
  Real atoms_imag = 0, molecules_imag = 0;
};

// Normally ordered by construction: Re dx*sum(Phi*Psi) per species.
NumberIntegrands numbers_pp(const PPState& s, Real dx);

// Symmetric ordering corrected by half a quantum per mode:
// dx*sum|Psi|^2 - M/2 per species.
NumberIntegrands numbers_twa(const TWAState& s, Real dx);

// Raw momentum-space first moments of one trajectory, before any ordering
// correction.  The doubled-phase-space version pairs the creation-sign
// transform of Phi with the annihilation-sign transform of Psi, so its mean
// is already normally ordered; the classical-field version is |alpha_k|^2.
RealArray raw_nk_pp(const Field1D& psi, const Field1D& phi, Dft<Real>& dft);
RealArray raw_nk_twa(const Field1D& f, Dft<Real>& dft);

// Half-quantum shift per mode converting a raw first moment into a physical
// occupation: 0.5 for twa, 0 otherwise.  Divide by dx for the corresponding
// position-density shift.
Real ordering_shift_per_mode(Method m);

// Mergeable moment accumulator: each worker owns one per (save time, batch)
// and the harness merges them in trajectory order, so accumulation is
// associative by construction.  Scalar fields are plain sums over
// trajectories.  The number integrands and the peak density carry their
// ordering corrections already; the per-mode arrays and the fourth-order
// pair moments are raw and are converted by the estimators below.  The
// arrays are allocated only when spectra were requested at this time.
struct MomentSet {
  Method method = Method::twa;
  long count = 0;

  Real atoms = 0, molecules = 0;
  Real atoms_imag = 0, molecules_imag = 0;
  Real na_peak = 0;  // physical atomic density at x = 0 [m^-1]

  // Raw pair moments at the selected modes, bin-averaged over the optional
  // +-halfwidth offsets with the opposite-momentum pairing preserved.
  Complex bb4{}, cl4{}, n_plus{}, n_minus{};

  // Raw first moments per mode / per grid point.
  RealArray n_atom_k, n_mol_k, n_atom_x, n_mol_x;

  bool with_spectra() const { return n_atom_k.size() > 0; }

  static MomentSet zero(Method method, Eigen::Index num_points, bool spectra);

  // Adds another accumulator of identical shape.
  void merge(const MomentSet& other);
};

// One trajectory's contribution at one saved time.  Diverged or failed
// states contribute nothing; the harness accounts for them separately.
void accumulate_pp(MomentSet& ms, const PPState& s, Dft<Real>& dft,
                   const ModePair& modes, int bin_halfwidth);
void accumulate_twa(MomentSet& ms, const TWAState& s, Dft<Real>& dft,
                    const ModePair& modes, int bin_halfwidth);

// Deterministic pairing-theory contribution (count = 1): numbers, spectra,
// and Wick-factorized pair moments
//   <n_k n_k'>   = n_k n_k' + |G_A(k,k')|^2 + |G_N(k,k')|^2   (distinct)
//   <a+a+aa>_k   = 2 n_k^2 + |G_A(k,k)|^2                     (same mode)
// assembled from the momentum-space correlation matrices, so the generic
// ratio estimator below reproduces the closed forms
//   g2_bb = 1 + (|G_A(+,-)|^2 + |G_N(+,-)|^2) / (n+ n-)
//   g2_cl = 2 + |G_A(+,+)|^2 / n+^2.
void accumulate_hfb(MomentSet& ms, const HFBState& s, Dft<Real>& dft,
                    const ModePair& modes, int bin_halfwidth);

struct MeanSE {
  Real mean = 0, se = 0;
};

// Pooled mean and unweighted batch-means standard error of one scalar
// accumulator.  Empty batches are skipped; with fewer than two usable
// batches the SE is zero (the deterministic single-batch case).
MeanSE scalar_estimate(const std::vector<MomentSet>& batches,
                       Real MomentSet::*field);

struct ArrayEstimate {
  RealArray mean, se;
};

// Physical (ordering-corrected) spectra and densities from accumulators that
// carry the optional arrays.
struct SpectraEstimate {
  ArrayEstimate atom_k, mol_k, atom_x, mol_x;
};

SpectraEstimate spectra_estimate(const std::vector<MomentSet>& batches, Real dx);

// Second-order correlations at the selected mode pair.  Point estimates come
// from the pooled means; error bars from the scatter of per-batch estimates
// (ratio statistics bias the naive propagation).  A correlation whose
// denominator mean is not resolved (mean < 3 x its SE, or below 1e-12 for
// the deterministic method) is flagged undefined and reported as NaN rather
// than fabricated; classical-field results additionally go NaN while the
// occupation sits below the signal floor.
struct CorrelationResult {
  Real t = 0;
  MeanSE g2_bb, g2_cl;
  MeanSE n_plus, n_minus;  // physical occupations at the selected modes
  bool bb_defined = false, cl_defined = false;
  bool suppressed = false;
};

CorrelationResult correlation_estimate(const std::vector<MomentSet>& batches,
                                       Real signal_floor);

// Convenience wrapper for the deterministic method.
CorrelationResult g2_hfb(const HFBState& s, Dft<Real>& dft,
                         const ModePair& modes, int bin_halfwidth);

// Earliest saved time satisfying t >= pi / (2 u_aa n_a(0,t)), the
// self-consistent crossing of the phase-diffusion timescale with the peak
// atomic density; infinite when never satisfied or when u_aa <= 0.
struct DiffusionEstimate {
  bool finite = false;
  Real t = std::numeric_limits<Real>::infinity();
  std::string note;
};

DiffusionEstimate diffusion_time(const RealArray& times,
                                 const RealArray& peak_density, Real u_aa);

// Mean occupation over the band 0.5*k0 <= |k| <= 1.5*k0, the classical-field
// validity guard: fewer than about one real particle per relevant mode means
// the truncation is suspect.  NaN when the band contains no modes.
Real band_mean_occupation(const RealArray& n_k, const RealArray& k_grid,
                          Real k0);

}  // namespace dissoc
